"""Gate-level expansion of uniformly controlled rotation sets and controlled diagonals.

Both families are multiplexed two-level rotations on one target qudit. A
*placement* is a sequence of rotation slots separated by sign-flipping
two-qudit gates: GCZ(m - j) for R_y on levels (i, j), GCX(m -> X^(0v)) for
the relative-phase rotations of a diagonal. For a control state t the slot
angles combine with signs ``sigma(t, s) = (-1)^(flips after slot s triggered by t)``
and the slot angles are recovered by solving ``sigma @ phi = theta``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np
import scipy.linalg

from .circuit import (
    GCX,
    GCZ,
    OneQudit,
    RotPhase,
    RotY,
    hadamard_matrix,
)

log = logging.getLogger(__name__)

ANGLE_ATOL = 1e-12
SOLVE_TOL = 1e-10


class PlacementError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# placements


@dataclass(frozen=True)
class PlacementPlan:
    """Slots and flips over ``k`` controls.

    ``items`` holds ``None`` for a rotation slot and ``(control_position, value)``
    for a flip. The final ``n_trailing`` flips form the run moved into the
    absorbed diagonal.
    """

    d: int
    k: int
    items: tuple
    n_trailing: int
    scheme: str

    @property
    def n_slots(self) -> int:
        return sum(it is None for it in self.items)

    @property
    def n_flips(self) -> int:
        return len(self.items) - self.n_slots

    @property
    def post_absorption(self) -> int:
        return self.n_flips - self.n_trailing

    @property
    def trailing(self) -> tuple:
        return self.items[len(self.items) - self.n_trailing :]

    def insertions(self) -> list[tuple[int, int, int]]:
        """``(slots_before, control_position, value)`` for every flip."""
        out, slots = [], 0
        for it in self.items:
            if it is None:
                slots += 1
            else:
                out.append((slots, it[0], it[1]))
        return out


def _shift(items, by: int) -> list:
    return [None if it is None else (it[0] + by, it[1]) for it in items]


def _single_control(d: int) -> list:
    items = [None]
    for v in range(1, d):
        items += [(0, v), None]
    return items + [(0, v) for v in range(1, d)]


def _simplify_runs(items: list) -> list:
    """Cancel flips pairwise inside each maximal run of consecutive flips."""
    out, run = [], []

    def flush():
        counts: dict = {}
        for f in run:
            counts[f] = counts.get(f, 0) + 1
        seen = set()
        for f in run:
            if counts[f] % 2 and f not in seen:
                out.append(f)
                seen.add(f)
        run.clear()

    for it in items:
        if it is None:
            flush()
            out.append(None)
        else:
            run.append(it)
    flush()
    return out


def _trailing_len(items) -> int:
    n = 0
    for it in reversed(items):
        if it is None:
            break
        n += 1
    return n


@lru_cache(maxsize=None)
def mirrored_plan(d: int, k: int) -> PlacementPlan:
    """``2(d-1)d^(k-1)`` flips with a trailing run of the ``d-1`` outer-control flips.

    Copy 0 of the inner placement is followed by a mirrored copy 1 so their
    designated trailing runs cancel; copies 2..d-1 keep their runs in place.
    """
    if k == 1:
        return PlacementPlan(d, 1, tuple(_single_control(d)), d - 1, "paper")
    inner = mirrored_plan(d, k - 1)
    full = _shift(inner.items, 1)
    tail = d - 1
    items = full[: len(full) - tail] + [(0, 1)] + list(reversed(full))[tail:]
    for v in range(2, d):
        items += [(0, v)] + full
    items += [(0, v) for v in range(1, d)]
    return PlacementPlan(d, k, tuple(items), d - 1, "paper")


@lru_cache(maxsize=None)
def layered_plan(d: int, k: int) -> PlacementPlan:
    """Fallback: d full inner copies separated by outer flips, no cancellation.

    The trailing run collects one run per level, ``k(d-1)`` flips in all.
    """
    if k == 1:
        return PlacementPlan(d, 1, tuple(_single_control(d)), d - 1, "fallback")
    inner = layered_plan(d, k - 1)
    full = _shift(inner.items, 1)
    items = list(full)
    for v in range(1, d):
        items += [(0, v)] + full
    items += [(0, v) for v in range(1, d)]
    return PlacementPlan(d, k, tuple(items), inner.n_trailing + d - 1, "fallback")


@lru_cache(maxsize=None)
def alternating_plan(d: int, k: int) -> PlacementPlan:
    """Inner copies alternate forward/mirrored; one flip between any two slots.

    Everything after the last slot counts as trailing.
    """
    if k == 0:
        return PlacementPlan(d, 0, (None,), 0, "alternating")
    if k == 1:
        items = _single_control(d)
    else:
        inner = alternating_plan(d, k - 1)
        fwd = _shift(inner.items, 1)
        rev = list(reversed(fwd))
        items = list(fwd)
        for v in range(1, d):
            items += [(0, v)] + (rev if v % 2 else fwd)
        items += [(0, v) for v in range(1, d)]
        items = _simplify_runs(items)
    return PlacementPlan(d, k, tuple(items), _trailing_len(items), "alternating")


def state_digits(d: int, k: int) -> np.ndarray:
    """``(d^k, k)`` digits of each control state, first control most significant."""
    if k == 0:
        return np.zeros((1, 0), dtype=int)
    return np.array(np.unravel_index(np.arange(d**k), (d,) * k)).T


def _parities(plan: PlacementPlan) -> tuple[np.ndarray, np.ndarray]:
    digits = state_digits(plan.d, plan.k)
    parity = np.zeros(len(digits), dtype=bool)
    cols = []
    for it in reversed(plan.items):
        if it is None:
            cols.append(parity.copy())
        else:
            parity ^= digits[:, it[0]] == it[1]
    return np.array(cols[::-1]).T, parity


def sign_matrix(plan: PlacementPlan) -> np.ndarray:
    """``sigma[t, s]`` for control state t and slot s."""
    par, _ = _parities(plan)
    return np.where(par, -1.0, 1.0)


def check_plan(plan: PlacementPlan) -> None:
    """Every state must see an even number of flips and the sign matrix must be invertible."""
    par, total = _parities(plan)
    if total.any():
        raise PlacementError(f"{plan.scheme} placement leaves odd flip parity")
    sigma = np.where(par, -1.0, 1.0)
    if sigma.shape[0] != sigma.shape[1]:
        raise PlacementError(f"sign matrix is {sigma.shape}, not square")
    if np.linalg.matrix_rank(sigma) < sigma.shape[0]:
        raise PlacementError(f"{plan.scheme} sign matrix is singular for d={plan.d}, k={plan.k}")


@lru_cache(maxsize=None)
def _factored(plan: PlacementPlan):
    check_plan(plan)
    sigma = sign_matrix(plan)
    return sigma, scipy.linalg.lu_factor(sigma)


def solve_slot_angles(plan: PlacementPlan, theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    sigma, lu = _factored(plan)
    phi = scipy.linalg.lu_solve(lu, theta)
    resid = np.max(np.abs(sigma @ phi - theta))
    if resid > SOLVE_TOL * max(1.0, np.max(np.abs(theta))):
        raise PlacementError(f"slot angle solve residual {resid:.3e}")
    return phi


def rotation_plan(d: int, k: int, scheme: str = "paper") -> PlacementPlan:
    """Placement for a k-control rotation set; falls back to the layered plan if the mirrored one fails."""
    if scheme not in ("paper", "fallback"):
        raise ValueError(f"unknown scheme {scheme!r}")
    if scheme == "paper":
        try:
            plan = mirrored_plan(d, k)
            check_plan(plan)
            return plan
        except PlacementError as exc:
            log.warning("mirrored placement rejected (d=%d, k=%d): %s; using fallback", d, k, exc)
    plan = layered_plan(d, k)
    check_plan(plan)
    return plan


# beyond this many control states the plans are not materialized; the
# structural counts below are checked against the plans for smaller sizes
PLAN_LIMIT = 4096


def rotation_set_cost(d: int, k: int, scheme: str = "paper") -> int:
    """Two-qudit gates per rotation set after the trailing run is absorbed."""
    if k == 0:
        return 0
    if d**k <= PLAN_LIMIT:
        return rotation_plan(d, k, scheme).post_absorption
    if scheme == "paper":
        return (d - 1) * (2 * d ** (k - 1) - 1)
    return 2 * (d**k - 1) - k * (d - 1)


def controlled_diagonal_cost(d: int, m: int) -> int:
    """GCX count of the cascade for a diagonal on ``m`` targets with one control."""
    total = 0
    for j in range(1, m + 1):
        core = alternating_plan(d, j - 1).post_absorption if d ** (j - 1) <= PLAN_LIMIT else d ** (j - 1) - 1
        total += (d - 1) * (2 * core + 2)
    return total


# ---------------------------------------------------------------------------
# rotation sets


@dataclass
class RotationSet:
    """``sum_t |t><t| (x) R_y^(ij)(angles[t])`` over control states t."""

    controls: tuple
    target: int
    i: int
    j: int
    angles: np.ndarray

    @property
    def k(self) -> int:
        return len(self.controls)

    def local_blocks(self, d: int) -> np.ndarray:
        """Per-control-state ``d x d`` target matrices, shape ``(d^k, d, d)``."""
        from .circuit import roty_matrix

        return np.array([roty_matrix(d, self.i, self.j, a) for a in self.angles])


@dataclass
class ExpandedRotationSet:
    """``absorbed @ evaluate(gates)`` equals the rotation set.

    ``absorbed`` is a diagonal of +-1 with shape ``(d,) * (k + 1)``, axes
    ordered (target, *controls).
    """

    gates: list
    absorbed: np.ndarray
    plan: Optional[PlacementPlan]
    gcz_pre: int
    gcz_post: int


def expand_rotation_set(rs: RotationSet, d: int, scheme: str = "paper") -> ExpandedRotationSet:
    angles = np.asarray(rs.angles, dtype=float)
    k = rs.k
    if len(angles) != d**k:
        raise ValueError(f"rotation set needs {d**k} angles, got {len(angles)}")
    if not rs.i < rs.j:
        raise ValueError("levels must satisfy i < j")
    absorbed = np.ones((d,) * (k + 1))
    if k == 0 or np.ptp(angles) <= ANGLE_ATOL:
        gates = [] if abs(angles[0]) <= ANGLE_ATOL else [RotY(rs.target, rs.i, rs.j, float(angles[0]))]
        return ExpandedRotationSet(gates, absorbed, None, 0, 0)

    plan = rotation_plan(d, k, scheme)
    phi = solve_slot_angles(plan, angles)
    body = plan.items[: len(plan.items) - plan.n_trailing]
    gates, s = [], 0
    for it in body:
        if it is None:
            if abs(phi[s]) > ANGLE_ATOL:
                gates.append(RotY(rs.target, rs.i, rs.j, float(phi[s])))
            s += 1
        else:
            gates.append(GCZ(rs.controls[it[0]], rs.target, it[1], rs.j))
    digits = state_digits(d, k)
    flips = np.zeros(d**k, dtype=bool)
    for pos, val in plan.trailing:
        flips ^= digits[:, pos] == val
    absorbed[rs.j] = np.where(flips, -1.0, 1.0).reshape((d,) * k)
    return ExpandedRotationSet(gates, absorbed, plan, plan.n_flips, plan.post_absorption)


# ---------------------------------------------------------------------------
# controlled diagonals


@dataclass
class ControlledDiagonal:
    """``diag(exp(i*phases))`` on ``targets`` iff ``control`` is in ``control_state``.

    ``phases`` has length ``d^m``, first target most significant.
    """

    control: int
    control_state: int
    targets: tuple
    phases: np.ndarray

    @property
    def m(self) -> int:
        return len(self.targets)

    def canonical(self) -> tuple["ControlledDiagonal", float]:
        """Shift so ``phases[0] == 0``; return the removed phase, a one-qudit phase on the control."""
        p0 = float(self.phases[0])
        return (
            ControlledDiagonal(self.control, self.control_state, self.targets, self.phases - p0),
            p0,
        )


def _simplify_gcx_runs(gates: list) -> list:
    """Cancel equal GCX gates pairwise within runs of commuting GCX gates."""
    out, run = [], []

    def flush():
        counts: dict = {}
        for g in run:
            counts[g] = counts.get(g, 0) + 1
        seen = set()
        for g in run:
            if counts[g] % 2 and g not in seen:
                out.append(g)
                seen.add(g)
        run.clear()

    for g in gates:
        if isinstance(g, GCX) and (not run or (g.t, g.i, g.j) == (run[0].t, run[0].i, run[0].j)):
            run.append(g)
        else:
            flush()
            if isinstance(g, GCX):
                run.append(g)
            else:
                out.append(g)
    flush()
    return out


def _phase_stage(control, state, rest, target, v, alpha, d, elide=True) -> list:
    """Relative-phase rotation ``alpha(x)`` on levels (0, v) of ``target``, gated on ``control == state``.

    Built as mux(alpha/2), GCX on the control, the mirrored mux(-alpha/2),
    GCX again. The mux flips after the last slot cancel against the mirror.
    """
    plan = alternating_plan(d, len(rest))
    phi = solve_slot_angles(plan, alpha / 2)
    fwd, s = [], 0
    for it in plan.items:
        if it is None:
            fwd.append(RotPhase(target, 0, v, float(phi[s])))
            s += 1
        else:
            fwd.append(GCX(rest[it[0]], target, it[1], 0, v))
    mirror = [
        RotPhase(g.q, g.i, g.j, -g.phi) if isinstance(g, RotPhase) else g for g in reversed(fwd)
    ]
    ctrl = GCX(control, target, state, 0, v)
    gates = _simplify_gcx_runs(fwd + [ctrl] + mirror + [ctrl])
    if not elide:
        return gates
    return [g for g in gates if not (isinstance(g, RotPhase) and abs(g.phi) <= ANGLE_ATOL)]


def _expand_diag(control, state, targets, phases, d, elide=True) -> list:
    if not targets:
        p = float(phases.reshape(-1)[0])
        if abs(np.angle(np.exp(1j * p))) <= ANGLE_ATOL:
            return []
        u = np.eye(d, dtype=np.complex128)
        u[state, state] = np.exp(1j * p)
        return [OneQudit(control, u)]
    rest, last = targets[:-1], targets[-1]
    ph = phases.reshape(-1, d)
    mean = ph.mean(axis=1)
    rel = ph - mean[:, None]
    gates = []
    for v in range(1, d):
        alpha = 2 * rel[:, v]
        if elide and np.max(np.abs(alpha)) <= ANGLE_ATOL:
            continue
        gates += _phase_stage(control, state, rest, last, v, alpha, d, elide)
    return gates + _expand_diag(control, state, rest, mean, d, elide)


def expand_controlled_diagonal(cd: ControlledDiagonal, d: int, elide: bool = True) -> list:
    """Gate list realizing ``cd`` exactly, using at most ``2(d^m - 1)`` GCX gates.

    With ``elide=False`` every stage is emitted even when its angles vanish,
    so the GCX count is exactly ``2(d^m - 1)``.
    """
    phases = np.asarray(cd.phases, dtype=float)
    if len(phases) != d**cd.m:
        raise ValueError(f"controlled diagonal needs {d**cd.m} phases, got {len(phases)}")
    if cd.control in cd.targets:
        raise ValueError("control qudit cannot also be a target")
    return _expand_diag(cd.control, cd.control_state, tuple(cd.targets), phases, d, elide)


# ---------------------------------------------------------------------------
# GCX <-> GCZ


def gcz_gcx_convert(g, d: int, partner: Optional[int] = None) -> list:
    """Rewrite GCX as ``H GCZ H`` on the target, or GCZ as ``H GCX H``.

    ``GCX(m -> X^(ij)) = (I (x) H) GCZ(m - j) (I (x) H)`` where ``H`` is the
    generalized Hadamard on levels (i, j) with its -1 on level j. For GCZ the
    ``partner`` level defaults to 0 (or 1 when the phase sits on level 0).
    """
    if isinstance(g, GCX):
        h = OneQudit(g.t, hadamard_matrix(d, g.i, g.j))
        return [h, GCZ(g.c, g.t, g.m, g.j), h]
    if isinstance(g, GCZ):
        j = g.mp
        i = partner if partner is not None else (0 if j != 0 else 1)
        if i == j:
            raise ValueError("partner level must differ from the phase level")
        h = OneQudit(g.t, hadamard_matrix(d, i, j))
        return [h, GCX(g.c, g.t, g.m, min(i, j), max(i, j)), h]
    raise TypeError(f"expected GCX or GCZ, got {g!r}")
