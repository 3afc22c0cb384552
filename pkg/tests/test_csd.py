import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mvqsd.circuit import QuditSpec
from mvqsd.csd import (
    build_split_tree,
    check_reconstruction,
    cosine_sine_decompose,
    kappa,
    multilevel_decompose,
)
from mvqsd.numerics import haar_random_unitary, phase_distance


def test_csd_identity():
    res = cosine_sine_decompose(np.eye(4), 2)
    np.testing.assert_allclose(res.thetas, 0, atol=1e-14)
    assert np.linalg.norm(res.reconstruct() - np.eye(4)) < 1e-12


def test_csd_rotation():
    a = 0.7
    w = np.array([[np.cos(a), -np.sin(a)], [np.sin(a), np.cos(a)]])
    res = cosine_sine_decompose(w, 1)
    assert res.thetas[0] == pytest.approx(a)
    for blk in (res.U1, res.U2, res.V1, res.V2):
        assert abs(abs(blk[0, 0]) - 1) < 1e-12


def test_csd_rejects():
    with pytest.raises(ValueError):
        cosine_sine_decompose(np.eye(4), 3)
    with pytest.raises(ValueError):
        cosine_sine_decompose(np.ones((4, 4)), 2)


@given(st.integers(2, 16), st.integers(0, 2**32), st.data())
def test_csd_reconstructs(m, seed, data):
    r = data.draw(st.integers(1, m // 2))
    w = haar_random_unitary(m, seed)
    res = cosine_sine_decompose(w, r)
    assert phase_distance(res.reconstruct(), w) <= 1e-9
    assert np.all((res.thetas >= 0) & (res.thetas <= np.pi / 2))
    assert np.all(np.diff(res.thetas) >= 0)


def test_split_tree_examples():
    t3 = build_split_tree(3)
    assert t3.kappa == 2
    assert t3.coupled_pairs() == {(0, 1): 1, (1, 2): 2}
    t6 = build_split_tree(6)
    assert t6.kappa == 3
    assert t6.root.pairs() == [(0, 3), (1, 4), (2, 5)]
    assert sum(build_split_tree(4).coupled_pairs().values()) == 6


@pytest.mark.parametrize("d", range(2, 9))
def test_split_tree_invariants(d):
    t = build_split_tree(d)
    assert t.kappa == kappa(d)
    assert np.log2(d) <= t.kappa < np.log2(d) + 1
    assert [leaf.size for leaf in t.leaves()] == [1] * d
    assert sum(t.coupled_pairs().values()) == d * (d - 1) // 2


@pytest.mark.parametrize("d", range(2, 9))
def test_count_identities(d):
    fs = multilevel_decompose(haar_random_unitary(d * d, d), QuditSpec(2, d))
    k = kappa(d)
    assert len(fs.block_factors) == 2**k
    assert len(fs.cs_factors) == 2**k - 1
    assert fs.coupled_pair_total() == d * (d - 1) // 2
    for g in fs.cs_factors:
        levels = [lv for p in g.pairs for lv in (p.i, p.j)]
        assert len(levels) == len(set(levels))
        for p in g.pairs:
            assert np.all((p.angles >= 0) & (p.angles <= np.pi / 2))


def test_qutrit_and_six_patterns():
    fs3 = multilevel_decompose(haar_random_unitary(9, 0), QuditSpec(2, 3))
    assert [[(p.i, p.j) for p in g.pairs] for g in fs3.cs_factors] == [[(1, 2)], [(0, 1)], [(1, 2)]]
    fs6 = multilevel_decompose(haar_random_unitary(36, 0), QuditSpec(2, 6))
    pattern = [[(p.i, p.j) for p in g.pairs] for g in fs6.cs_factors]
    assert pattern[3] == [(0, 3), (1, 4), (2, 5)]
    assert pattern[1] == [(0, 1), (3, 4)]
    assert len(fs6.block_factors) == 8 and fs6.coupled_pair_total() == 15


def test_identity_input():
    fs = multilevel_decompose(np.eye(9), QuditSpec(2, 3))
    assert all(b is None for f in fs.block_factors for b in f.blocks)
    assert all(np.all(p.angles == 0) for g in fs.cs_factors for p in g.pairs)


def test_rejects_single_qudit():
    with pytest.raises(ValueError):
        multilevel_decompose(np.eye(3), QuditSpec(1, 3))


GRID = [(d, 2) for d in range(2, 9)] + [(3, 3), (4, 3), (5, 3), (3, 4)]


@pytest.mark.parametrize("d,n", GRID)
def test_reconstruction_grid(d, n):
    spec = QuditSpec(n, d)
    for seed in range(20 if spec.dim <= 64 else 5):
        w = haar_random_unitary(spec.dim, seed)
        assert check_reconstruction(multilevel_decompose(w, spec), w) <= 1e-8


def test_json_dump_shape():
    fs = multilevel_decompose(haar_random_unitary(9, 1), QuditSpec(2, 3))
    doc = fs.to_json()
    assert [f["kind"] for f in doc["factors"]] == ["block", "cs", "block", "cs", "block", "cs", "block"]
