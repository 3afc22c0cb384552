"""Recursive synthesis: multilevel CSD, block rearrangement, demultiplexing, gate expansion."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .circuit import (
    DEFAULT_EVALUATION_CAP,
    Circuit,
    EvaluationCapExceeded,
    OneQudit,
    QuditSpec,
    evaluate_circuit,
)
from .components import (
    ControlledDiagonal,
    RotationSet,
    controlled_diagonal_cost,
    expand_controlled_diagonal,
    expand_rotation_set,
    rotation_set_cost,
)
from .csd import BlockFactor, CosineSineFactor, FactorSequence, kappa, multilevel_decompose
from .numerics import (
    DEFAULT_TOLERANCES,
    NumericalError,
    Tolerances,
    eig_unitary,
    is_global_phase,
    is_identity,
    phase_distance,
    require_unitary,
)

log = logging.getLogger(__name__)

IDENTITY_ATOL = 1e-12


class RearrangementError(RuntimeError):
    """The rearranged sequence exceeds the component budget."""


@dataclass(frozen=True)
class SynthesisOptions:
    mode: str = "full"
    rotation_scheme: str = "paper"
    cap: int = DEFAULT_EVALUATION_CAP
    tol: Tolerances = DEFAULT_TOLERANCES

    def __post_init__(self):
        if self.mode not in ("full", "structured"):
            raise ValueError(f"mode must be 'full' or 'structured', got {self.mode!r}")
        if self.rotation_scheme not in ("paper", "fallback"):
            raise ValueError(f"rotation_scheme must be 'paper' or 'fallback', got {self.rotation_scheme!r}")
        if self.cap < 1:
            raise ValueError("evaluation cap must be positive")


# ---------------------------------------------------------------------------
# rearrangement


def _budget(d: int) -> tuple[int, int]:
    return d * d, d * d - 2 ** kappa(d)


def budget_usage(fs: FactorSequence) -> tuple[int, int]:
    """(non-identity blocks incl. broadcasts, controlled diagonals to be emitted)."""
    gates = diags = 0
    for b in fs.block_factors:
        c = b.nonidentity_count()
        gates += c
        diags += max(c - 1, 0)
    return gates, diags


def _tag(m: np.ndarray) -> Optional[np.ndarray]:
    return None if is_identity(m, IDENTITY_ATOL) else m


def rearrange_factors(fs: FactorSequence, check_budget: bool = True) -> FactorSequence:
    """Pull a broadcast gate out of each block factor and push residuals rightwards.

    For block factor p (not the last) the reference is the lowest level
    coupled by the following cosine-sine factor. The factor becomes
    ``(I (x) G) diag(G^dagger B_k)``; residuals on levels that factor leaves
    alone commute through it and are merged into the next block factor.
    The last block factor keeps its full blocks.
    """
    d, b = fs.spec.d, fs.block_size
    out = fs.copy()
    eye = np.eye(b, dtype=np.complex128)
    for p in range(0, len(out.factors) - 1, 2):
        bf: BlockFactor = out.factors[p]
        gamma: CosineSineFactor = out.factors[p + 1]
        nxt: BlockFactor = out.factors[p + 2]
        coupled = gamma.coupled_levels()
        if bf.broadcast is not None:
            raise ValueError("factor sequence is already rearranged")
        if not coupled:
            # nothing between this factor and the next: merge wholesale
            for lv in range(d):
                if bf.blocks[lv] is not None:
                    nb = nxt.blocks[lv]
                    nxt.blocks[lv] = _tag(bf.blocks[lv] if nb is None else bf.blocks[lv] @ nb)
            out.factors[p] = BlockFactor([None] * d)
            continue
        ref = min(coupled)
        g = bf.blocks[ref]
        gh = eye if g is None else g.conj().T
        blocks = []
        for lv in range(d):
            blk = bf.blocks[lv]
            res = None if lv == ref else _tag(gh @ (eye if blk is None else blk))
            if lv in coupled or res is None:
                blocks.append(res)
                continue
            nb = nxt.blocks[lv]
            nxt.blocks[lv] = _tag(res if nb is None else res @ nb)
            blocks.append(None)
        out.factors[p] = BlockFactor(blocks, None if g is None or is_identity(g, IDENTITY_ATOL) else g)

    if check_budget:
        used = budget_usage(out)
        budget = _budget(d)
        if used[0] > budget[0] or used[1] > budget[1]:
            raise RearrangementError(
                f"d={d}: achieved {used[0]} gates / {used[1]} diagonals, "
                f"component budget is {budget[0]} / {budget[1]}"
            )
    return out


# ---------------------------------------------------------------------------
# demultiplexing


@dataclass
class Demultiplexed:
    """Matrix-order ``B[0] CD[0] B[1] CD[1] ... B[c]``; ``None`` broadcasts are identities."""

    broadcasts: list
    diagonals: list

    def matrix(self, d: int, block_size: int) -> np.ndarray:
        out = np.eye(d * block_size, dtype=np.complex128)
        for k, g in enumerate(self.broadcasts):
            if g is not None:
                out = out @ np.kron(np.eye(d), g)
            if k < len(self.diagonals):
                cd = self.diagonals[k]
                phases = np.ones(d * block_size, dtype=np.complex128)
                sl = slice(cd.control_state * block_size, (cd.control_state + 1) * block_size)
                phases[sl] = np.exp(1j * np.asarray(cd.phases))
                out = out * phases[None, :]
        return out


def demultiplex_block_diagonal(
    bf: BlockFactor,
    control: int = 0,
    targets: Optional[tuple] = None,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> Demultiplexed:
    """Broadcast gates and controlled diagonals reproducing ``bf``.

    Without a broadcast prefix the most frequent block (the identity tag
    preferred) becomes the reference. Every non-reference block ``R_k`` is
    eigendecomposed as ``V_k D_k V_k^dagger``; the ``V`` factors of
    consecutive blocks fuse into the broadcasts between the diagonals.
    """
    d = len(bf.blocks)
    size = next((m.shape[0] for m in bf.blocks if m is not None), None)
    if size is None and bf.broadcast is not None:
        size = bf.broadcast.shape[0]
    if size is None:
        return Demultiplexed([None], [])
    n_targets = round(np.log(size) / np.log(d))
    if targets is None:
        targets = tuple(range(control + 1, control + 1 + n_targets))
    eye = np.eye(size, dtype=np.complex128)

    g = bf.broadcast
    residual = list(bf.blocks)
    if g is None:
        ref = _reference_block(bf.blocks)
        g = bf.blocks[ref]
        if g is not None:
            gh = g.conj().T
            residual = [None if lv == ref else _tag(gh @ (eye if m is None else m)) for lv, m in enumerate(bf.blocks)]

    broadcasts, diagonals = [g], []
    for lv, r in enumerate(residual):
        if r is None:
            continue
        v, phases = eig_unitary(r, tol)
        last = broadcasts[-1]
        broadcasts[-1] = v if last is None else last @ v
        diagonals.append(ControlledDiagonal(control, lv, tuple(targets), phases))
        broadcasts.append(v.conj().T)
    return Demultiplexed(broadcasts, diagonals)


def _reference_block(blocks: list) -> int:
    for lv, m in enumerate(blocks):
        if m is None:
            return lv
    best, best_count = 0, 0
    for a, ma in enumerate(blocks):
        count = sum(np.allclose(ma, mb, atol=IDENTITY_ATOL) for mb in blocks)
        if count > best_count:
            best, best_count = a, count
    return best


# ---------------------------------------------------------------------------
# synthesis


@dataclass
class ComponentTally:
    gates: int = 0
    diagonals: int = 0
    rotation_sets: int = 0


@dataclass
class StructuredDump:
    """Rearranged factor sequence with its verified reconstruction residual."""

    factors: FactorSequence
    residual: float
    budget_used: tuple

    def to_json(self) -> dict:
        body = self.factors.to_json()
        return {
            "schema": 1,
            "qudits": body["qudits"],
            "dim": body["dim"],
            "residual": self.residual,
            "budget": {"gates": self.budget_used[0], "diagonals": self.budget_used[1]},
            "factors": body["factors"],
        }


def _single_qudit(w: np.ndarray, q: int) -> list:
    if is_global_phase(w, IDENTITY_ATOL):
        return []
    return [OneQudit(q, w.copy())]


def _absorb_rotations(fs: FactorSequence, qs: tuple, opts: SynthesisOptions):
    """Expand every rotation set; fold the absorbed diagonals into the left block factor."""
    d, n = fs.spec.d, fs.spec.n
    bodies, n_sets = [], 0
    for p in range(1, len(fs.factors), 2):
        gamma = fs.factors[p]
        left: BlockFactor = fs.factors[p - 1]
        gates = []
        for pair in gamma.pairs:
            rs = RotationSet(tuple(qs[1:]), qs[0], pair.i, pair.j, 2 * pair.angles)
            ex = expand_rotation_set(rs, d, opts.rotation_scheme)
            if ex.gates:
                n_sets += 1
            gates += ex.gates
            flat = ex.absorbed.reshape(d, -1)
            for lv in range(d):
                if np.all(flat[lv] == 1):
                    continue
                blk = left.blocks[lv]
                diag = flat[lv].astype(np.complex128)
                left.blocks[lv] = _tag(np.diag(diag) if blk is None else blk * diag[None, :])
        bodies.append(gates)
    return bodies, n_sets


def _synth(w: np.ndarray, qs: tuple, d: int, opts: SynthesisOptions, tally: Optional[ComponentTally]) -> list:
    if len(qs) == 1:
        return _single_qudit(w, qs[0])
    if is_global_phase(w, IDENTITY_ATOL):
        return []
    spec = QuditSpec(len(qs), d)
    fs = multilevel_decompose(w, spec, opts.tol)
    bodies, n_sets = _absorb_rotations(fs, qs, opts)
    fs = rearrange_factors(fs)

    chunks = []  # matrix order; each chunk is a gate list in application order
    for p, f in enumerate(fs.factors):
        if p % 2:
            chunks.append(bodies[p // 2])
            continue
        dm = demultiplex_block_diagonal(f, qs[0], tuple(qs[1:]), opts.tol)
        for k, g in enumerate(dm.broadcasts):
            if g is not None and not is_global_phase(g, IDENTITY_ATOL):
                chunks.append(_synth(g, tuple(qs[1:]), d, opts, None))
                if tally is not None:
                    tally.gates += 1
            if k < len(dm.diagonals):
                chunks.append(expand_controlled_diagonal(dm.diagonals[k], d))
                if tally is not None:
                    tally.diagonals += 1
    if tally is not None:
        tally.rotation_sets += n_sets
    return [g for chunk in reversed(chunks) for g in chunk]


def structured_dump(w, spec: QuditSpec, opts: SynthesisOptions = SynthesisOptions()) -> StructuredDump:
    w = require_unitary(w, opts.tol, "input")
    if w.shape[0] != spec.dim:
        raise ValueError(f"matrix dimension {w.shape[0]} != d^n = {spec.dim}")
    fs = rearrange_factors(multilevel_decompose(w, spec, opts.tol))
    residual = phase_distance(fs.matrix(), w)
    if residual > opts.tol.reconstruction_tol:
        raise NumericalError(f"rearranged factor product residual {residual:.3e}")
    return StructuredDump(fs, residual, budget_usage(fs))


def synthesize(w, spec: QuditSpec, opts: SynthesisOptions = SynthesisOptions()):
    """Compile ``w`` to a :class:`Circuit` (full mode) or a :class:`StructuredDump`."""
    if opts.mode == "structured":
        return structured_dump(w, spec, opts)
    if spec.dim > opts.cap:
        raise EvaluationCapExceeded(
            f"d^n = {spec.dim} exceeds the evaluation cap of {opts.cap}; use structured mode"
        )
    w = require_unitary(w, opts.tol, "input")
    if w.shape[0] != spec.dim:
        raise ValueError(f"matrix dimension {w.shape[0]} != d^n = {spec.dim}")
    tally = ComponentTally()
    gates = _synth(w, tuple(range(spec.n)), spec.d, opts, tally if spec.n >= 2 else None)
    meta = {
        "scheme": opts.rotation_scheme,
        "top_gates": str(tally.gates),
        "top_diagonals": str(tally.diagonals),
        "top_rotation_sets": str(tally.rotation_sets),
    }
    return Circuit(spec, gates, meta)


@dataclass
class SynthesisReport:
    counts: dict
    tally: dict
    achieved_costs: dict
    residual: Optional[float] = None
    extra: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        out = {
            "schema": 1,
            "counts": self.counts,
            "components": self.tally,
            "achieved_costs": self.achieved_costs,
            "residual": self.residual,
        }
        out.update(self.extra)
        return out


def synthesis_report(circ: Circuit, w=None, cap: int = DEFAULT_EVALUATION_CAP) -> SynthesisReport:
    """Counts, top-level component tallies, per-component costs and (within cap) the residual."""
    from .circuit import count_gates

    d, n = circ.spec.d, circ.spec.n
    scheme = circ.metadata.get("scheme", "paper")
    tally = {
        "gates": int(circ.metadata.get("top_gates", 0)),
        "diagonals": int(circ.metadata.get("top_diagonals", 0)),
        "rotation_sets": int(circ.metadata.get("top_rotation_sets", 0)),
    }
    costs = {
        "rotation_set": {str(k): rotation_set_cost(d, k, scheme) for k in range(1, n)},
        "controlled_diagonal": {str(m): controlled_diagonal_cost(d, m) for m in range(1, n)},
    }
    residual = None
    if w is not None and circ.spec.dim <= cap:
        residual = phase_distance(evaluate_circuit(circ, cap), w)
    return SynthesisReport(count_gates(circ).as_dict(), tally, costs, residual, {"qudits": n, "dim": d, "scheme": scheme})
