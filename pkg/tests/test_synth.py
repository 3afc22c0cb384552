import numpy as np
import pytest
import scipy.linalg
from hypothesis import given
from hypothesis import strategies as st

from mvqsd.circuit import (
    GCX,
    Circuit,
    EvaluationCapExceeded,
    QuditSpec,
    count_gates,
    evaluate_circuit,
    gate_matrix,
)
from mvqsd.cost import CostParams, component_counts, model_gcx_count
from mvqsd.csd import BlockFactor, CosineSineFactor, CoupledPair, FactorSequence, kappa, multilevel_decompose
from mvqsd.numerics import haar_random_unitary, phase_distance
from mvqsd.synth import (
    RearrangementError,
    StructuredDump,
    SynthesisOptions,
    budget_usage,
    demultiplex_block_diagonal,
    rearrange_factors,
    synthesis_report,
    synthesize,
)


def test_rearrange_qutrit():
    fs = multilevel_decompose(haar_random_unitary(9, 0), QuditSpec(2, 3))
    out = rearrange_factors(fs)
    assert [b.nonidentity_count() for b in out.block_factors] == [2, 2, 2, 3]
    assert budget_usage(out) == (9, 5)
    assert phase_distance(out.matrix(), fs.matrix()) < 1e-10


@pytest.mark.parametrize("d", range(2, 9))
def test_rearrange_budget(d):
    spec = QuditSpec(2, d)
    w = haar_random_unitary(d * d, 100 + d)
    out = rearrange_factors(multilevel_decompose(w, spec))
    b = component_counts(d)
    assert budget_usage(out) == (b.gates, b.diagonals)
    assert phase_distance(out.matrix(), w) < 1e-9
    assert out.block_factors[-1].broadcast is None


def test_rearrange_all_blocks_equal():
    d, size = 3, 3
    spec = QuditSpec(2, d)
    fs = multilevel_decompose(haar_random_unitary(9, 5), spec)
    factors = []
    for p, f in enumerate(fs.factors):
        if p % 2:
            factors.append(f)
        else:
            u = haar_random_unitary(size, p)
            factors.append(BlockFactor([u.copy() for _ in range(d)]))
    seq = FactorSequence(spec, factors)
    out = rearrange_factors(seq)
    demuxed = [demultiplex_block_diagonal(b) for b in out.block_factors]
    gates = sum(g is not None for dm in demuxed for g in dm.broadcasts)
    assert sum(len(dm.diagonals) for dm in demuxed) == 0
    assert gates <= 2 ** kappa(d)
    assert phase_distance(out.matrix(), seq.matrix()) < 1e-10


def test_rearrange_budget_violation_reported():
    # a sequence with no cosine-sine coupling but full blocks everywhere still folds;
    # forcing extra residuals through an empty budget raises
    d = 2
    spec = QuditSpec(2, d)
    blocks = [haar_random_unitary(2, s) for s in range(2)]
    gamma = CosineSineFactor([CoupledPair(0, 1, np.array([0.1, 0.2]))])
    fs = FactorSequence(spec, [BlockFactor(list(blocks)), gamma, BlockFactor(list(blocks))])
    out = rearrange_factors(fs)
    assert budget_usage(out) == (4, 2)
    bad = FactorSequence(spec, [BlockFactor(list(blocks)), gamma, BlockFactor(list(blocks)), gamma,
                                BlockFactor(list(blocks))])
    with pytest.raises(RearrangementError, match="achieved 6"):
        rearrange_factors(bad)


def _demux_check(bf, d, size):
    dm = demultiplex_block_diagonal(bf)
    assert phase_distance(dm.matrix(d, size), bf.matrix(size)) <= 1e-9 * d * size
    return len([g for g in dm.broadcasts if g is not None]), len(dm.diagonals)


def test_demux_examples():
    u = [haar_random_unitary(3, s) for s in range(3)]
    assert _demux_check(BlockFactor([None, None, u[2]]), 3, 3) == (2, 1)
    assert _demux_check(BlockFactor(list(u)), 3, 3) == (3, 2)
    assert _demux_check(BlockFactor([u[0], u[1]]), 2, 3) == (2, 1)
    # identical blocks are one broadcast gate
    assert _demux_check(BlockFactor([u[0], u[0]]), 2, 3) == (1, 0)
    g = haar_random_unitary(3, 9)
    assert _demux_check(BlockFactor([None, u[1], None], broadcast=g), 3, 3) == (2, 1)


@pytest.mark.parametrize("d,n,expected", [(3, 2, 26), (5, 2, 176), (2, 2, 5), (4, 2, 90)])
def test_synthesize_counts(d, n, expected):
    spec = QuditSpec(n, d)
    w = haar_random_unitary(spec.dim, 2024)
    c = synthesize(w, spec)
    assert count_gates(c).elementary_total == expected
    assert phase_distance(evaluate_circuit(c), w) <= 1e-8


def test_identity_and_phase_give_no_gates():
    spec = QuditSpec(2, 3)
    assert count_gates(synthesize(np.eye(9), spec)).elementary_total == 0
    assert len(synthesize(np.exp(0.4j) * np.eye(9), spec)) == 0


def test_single_qudit():
    spec = QuditSpec(1, 5)
    w = haar_random_unitary(5, 1)
    c = synthesize(w, spec)
    assert len(c) == 1 and phase_distance(evaluate_circuit(c), w) < 1e-12


def special_matrices(d, n):
    spec = QuditSpec(n, d)
    dim = spec.dim
    rng = np.random.default_rng(d * 7 + n)
    yield "permutation", np.eye(dim)[rng.permutation(dim)]
    yield "diagonal", np.diag(np.exp(1j * rng.uniform(-np.pi, np.pi, dim)))
    yield "product", np.kron(haar_random_unitary(d, 1), haar_random_unitary(dim // d, 2))
    blocks = [haar_random_unitary(dim // d, s) for s in range(d)]
    yield "block_diagonal", scipy.linalg.block_diag(*blocks)
    yield "gcx", gate_matrix(GCX(0, 1, d - 1, 0, 1), spec)
    yield "real_orthogonal", np.linalg.qr(rng.standard_normal((dim, dim)))[0]


@pytest.mark.parametrize("d,n", [(2, 2), (3, 2), (4, 2), (5, 2), (2, 3), (3, 3)])
def test_structured_inputs_reconstruct(d, n):
    spec = QuditSpec(n, d)
    for name, w in special_matrices(d, n):
        c = synthesize(w, spec)
        assert phase_distance(evaluate_circuit(c), w) <= 1e-8, name
        assert count_gates(c).elementary_total <= model_gcx_count(d, n), name


@given(st.sampled_from([(2, 2), (3, 2), (2, 3), (4, 2)]), st.integers(0, 2**32))
def test_random_instances_match_achieved_model(dn, seed):
    d, n = dn
    spec = QuditSpec(n, d)
    w = haar_random_unitary(spec.dim, seed)
    c = synthesize(w, spec)
    assert phase_distance(evaluate_circuit(c), w) <= 1e-8
    assert count_gates(c).elementary_total == model_gcx_count(d, n, CostParams(mode="achieved"))


def test_fallback_scheme_bookkeeping():
    spec = QuditSpec(3, 3)
    w = haar_random_unitary(27, 8)
    c = synthesize(w, spec, SynthesisOptions(rotation_scheme="fallback"))
    assert phase_distance(evaluate_circuit(c), w) <= 1e-8
    achieved = model_gcx_count(3, 3, CostParams(mode="achieved", scheme="fallback"))
    assert count_gates(c).elementary_total == achieved == 350


def test_top_level_tallies():
    c = synthesize(haar_random_unitary(36, 3), QuditSpec(2, 6))
    rep = synthesis_report(c)
    assert rep.tally == {"gates": 36, "diagonals": 28, "rotation_sets": 15}


def test_structured_mode():
    spec = QuditSpec(2, 3)
    dump = synthesize(haar_random_unitary(9, 1), spec, SynthesisOptions(mode="structured"))
    assert isinstance(dump, StructuredDump)
    assert dump.residual <= 1e-8 and dump.budget_used == (9, 5)
    doc = dump.to_json()
    assert doc["schema"] == 1 and len(doc["factors"]) == 7


def test_cap_and_option_errors():
    spec = QuditSpec(3, 3)
    with pytest.raises(EvaluationCapExceeded, match="structured"):
        synthesize(np.eye(27), spec, SynthesisOptions(cap=9))
    with pytest.raises(ValueError):
        SynthesisOptions(mode="fast")
    with pytest.raises(ValueError):
        SynthesisOptions(rotation_scheme="gray")
    with pytest.raises(ValueError):
        synthesize(np.eye(8), spec)
    with pytest.raises(ValueError):
        synthesize(np.ones((9, 9)), QuditSpec(2, 3))


def test_report_residual_and_costs():
    spec = QuditSpec(2, 3)
    w = haar_random_unitary(9, 4)
    c = synthesize(w, spec)
    rep = synthesis_report(c, w)
    doc = rep.to_json()
    assert doc["schema"] == 1 and doc["counts"]["elementary_total"] == 26
    assert doc["achieved_costs"] == {"rotation_set": {"1": 2}, "controlled_diagonal": {"1": 4}}
    assert doc["residual"] < 1e-10


def test_circuit_is_valid_for_spec():
    spec = QuditSpec(2, 4)
    c = synthesize(haar_random_unitary(16, 0), spec)
    Circuit(spec, c.gates)  # validates every gate
