"""Cosine-sine decomposition and the multilevel balanced-split factorization.

A factor sequence is kept in *matrix order*: ``W = F[0] @ F[1] @ ... @ F[-1]``,
so the last factor acts first on a state. Block factors alternate with
cosine-sine factors, starting and ending with a block factor.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg

from .circuit import QuditSpec
from .numerics import (
    DEFAULT_TOLERANCES,
    NumericalError,
    Tolerances,
    is_identity,
    phase_distance,
    require_unitary,
)


@dataclass
class CSDResult:
    """``W = (U1 + U2) Gamma(thetas) (V1 + V2)`` with ``+`` the direct sum."""

    U1: np.ndarray
    U2: np.ndarray
    V1: np.ndarray
    V2: np.ndarray
    thetas: np.ndarray

    def gamma(self) -> np.ndarray:
        return cs_matrix(self.thetas, self.U1.shape[0] + self.U2.shape[0])

    def reconstruct(self) -> np.ndarray:
        u = scipy.linalg.block_diag(self.U1, self.U2)
        v = scipy.linalg.block_diag(self.V1, self.V2)
        return u @ self.gamma() @ v


def cs_matrix(thetas, m: int) -> np.ndarray:
    """``[[C, -S, 0], [S, C, 0], [0, 0, I]]`` with ``r = len(thetas)``."""
    thetas = np.asarray(thetas, dtype=float)
    r = len(thetas)
    g = np.eye(m, dtype=np.complex128)
    idx = np.arange(r)
    c, s = np.cos(thetas), np.sin(thetas)
    g[idx, idx] = c
    g[idx, r + idx] = -s
    g[r + idx, idx] = s
    g[r + idx, r + idx] = c
    return g


def cosine_sine_decompose(w, r: int, tol: Tolerances = DEFAULT_TOLERANCES) -> CSDResult:
    """CSD of a unitary with partition size ``r`` (``2r <= m``).

    Angles come back in [0, pi/2], sorted ascending.
    """
    w = require_unitary(w, tol, "CSD input")
    m = w.shape[0]
    if r < 1 or 2 * r > m:
        raise ValueError(f"partition size r={r} must satisfy 1 <= r and 2r <= m={m}")
    try:
        (u1, u2), theta, (v1, v2) = scipy.linalg.cossin(w, p=r, q=r, separate=True)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericalError(f"cosine-sine decomposition failed: {exc}") from exc

    # LAPACK puts the identity part of the lower partition first; move it last.
    perm = np.r_[np.arange(m - 2 * r, m - r), np.arange(0, m - 2 * r)]
    u2 = u2[:, perm]
    v2 = v2[perm, :]

    order = np.argsort(theta, kind="stable")
    theta = np.asarray(theta, dtype=float)[order]
    u1 = u1[:, order]
    v1 = v1[order, :]
    u2 = u2.copy()
    v2 = v2.copy()
    u2[:, :r] = u2[:, :r][:, order]
    v2[:r, :] = v2[:r, :][order, :]
    theta = np.clip(theta, 0.0, np.pi / 2)

    res = CSDResult(u1, u2, v1, v2, theta)
    err = np.linalg.norm(res.reconstruct() - w)
    if err > tol.reconstruction_tol * max(1.0, np.sqrt(m)):
        raise NumericalError(f"CSD reconstruction residual {err:.3e} out of tolerance")
    return res


# ---------------------------------------------------------------------------
# split tree


@dataclass
class SplitNode:
    """Level set ``[lo, hi)``; internal nodes split after the first ``(hi-lo)//2`` levels."""

    lo: int
    hi: int
    left: Optional["SplitNode"] = None
    right: Optional["SplitNode"] = None

    @property
    def size(self) -> int:
        return self.hi - self.lo

    @property
    def is_leaf(self) -> bool:
        return self.left is None

    @property
    def depth(self) -> int:
        if self.is_leaf:
            return 0
        return 1 + max(self.left.depth, self.right.depth)

    def pairs(self) -> list[tuple[int, int]]:
        half = self.size // 2
        return [(self.lo + k, self.lo + half + k) for k in range(half)]


@dataclass
class SplitTree:
    d: int
    root: SplitNode

    @property
    def kappa(self) -> int:
        return self.root.depth

    def leaves(self) -> list[SplitNode]:
        out, stack = [], [self.root]
        while stack:
            node = stack.pop()
            if node.is_leaf:
                out.append(node)
            else:
                stack.extend([node.right, node.left])
        return out

    def coupled_pairs(self) -> dict[tuple[int, int], int]:
        """Each coupled level pair with its multiplicity across the factor sequence."""
        counts: dict[tuple[int, int], int] = {}

        def walk(node, mult):
            if node.is_leaf:
                return
            for p in node.pairs():
                counts[p] = counts.get(p, 0) + mult
            walk(node.left, 2 * mult)
            walk(node.right, 2 * mult)

        walk(self.root, 1)
        return counts


def _build(lo: int, hi: int) -> SplitNode:
    node = SplitNode(lo, hi)
    if hi - lo > 1:
        mid = lo + (hi - lo) // 2
        node.left, node.right = _build(lo, mid), _build(mid, hi)
    return node


def build_split_tree(d: int) -> SplitTree:
    if d < 2:
        raise ValueError("dimension must be >= 2")
    return SplitTree(d, _build(0, d))


def kappa(d: int) -> int:
    """``ceil(log2 d)``, the number of split levels."""
    return (d - 1).bit_length()


# ---------------------------------------------------------------------------
# factor sequence


@dataclass
class BlockFactor:
    """``(I (x) broadcast) @ diag(blocks)``; ``None`` entries are exact identities."""

    blocks: list
    broadcast: Optional[np.ndarray] = None

    def nonidentity_count(self) -> int:
        """Non-identity residual blocks, plus one for a non-identity broadcast."""
        n = sum(b is not None for b in self.blocks)
        return n + (self.broadcast is not None)

    def matrix(self, block_size: int) -> np.ndarray:
        d = len(self.blocks)
        eye = np.eye(block_size, dtype=np.complex128)
        diag = scipy.linalg.block_diag(*[eye if b is None else b for b in self.blocks])
        if self.broadcast is None:
            return diag
        return np.kron(np.eye(d), self.broadcast) @ diag

    def copy(self) -> "BlockFactor":
        return BlockFactor(
            [None if b is None else b.copy() for b in self.blocks],
            None if self.broadcast is None else self.broadcast.copy(),
        )


@dataclass
class CoupledPair:
    """Levels ``i < j`` of qudit 0 mixed by ``[[C, -S], [S, C]]``, one angle per control state."""

    i: int
    j: int
    angles: np.ndarray


@dataclass
class CosineSineFactor:
    pairs: list = field(default_factory=list)

    def coupled_levels(self) -> set[int]:
        return {lv for p in self.pairs for lv in (p.i, p.j)}

    def matrix(self, d: int, block_size: int) -> np.ndarray:
        g = np.eye(d * block_size, dtype=np.complex128)
        idx = np.arange(block_size)
        for p in self.pairs:
            a, b = p.i * block_size + idx, p.j * block_size + idx
            c, s = np.cos(p.angles), np.sin(p.angles)
            g[a, a], g[a, b], g[b, a], g[b, b] = c, -s, s, c
        return g


@dataclass
class FactorSequence:
    """Alternating block and cosine-sine factors in matrix order."""

    spec: QuditSpec
    factors: list

    @property
    def block_size(self) -> int:
        return self.spec.d ** (self.spec.n - 1)

    @property
    def block_factors(self) -> list[BlockFactor]:
        return self.factors[0::2]

    @property
    def cs_factors(self) -> list[CosineSineFactor]:
        return self.factors[1::2]

    def factor_matrix(self, f) -> np.ndarray:
        if isinstance(f, BlockFactor):
            return f.matrix(self.block_size)
        return f.matrix(self.spec.d, self.block_size)

    def matrix(self) -> np.ndarray:
        out = np.eye(self.spec.dim, dtype=np.complex128)
        for f in self.factors:
            out = out @ self.factor_matrix(f)
        return out

    def coupled_pair_total(self) -> int:
        return sum(len(g.pairs) for g in self.cs_factors)

    def copy(self) -> "FactorSequence":
        out = []
        for f in self.factors:
            if isinstance(f, BlockFactor):
                out.append(f.copy())
            else:
                out.append(CosineSineFactor([CoupledPair(p.i, p.j, p.angles.copy()) for p in f.pairs]))
        return FactorSequence(self.spec, out)

    def to_json(self) -> dict:
        def mat(m):
            return None if m is None else [[[z.real, z.imag] for z in row] for row in m]

        out = []
        for f in self.factors:
            if isinstance(f, BlockFactor):
                out.append(
                    {
                        "kind": "block",
                        "broadcast": mat(f.broadcast),
                        "blocks": [mat(b) for b in f.blocks],
                    }
                )
            else:
                out.append(
                    {
                        "kind": "cs",
                        "pairs": [
                            {"i": p.i, "j": p.j, "angles": [float(a) for a in p.angles]}
                            for p in f.pairs
                        ],
                    }
                )
        return {"qudits": self.spec.n, "dim": self.spec.d, "factors": out}


def _merge(a: list, b: list) -> list:
    """Positional merge of two sibling sequences, padding the shorter at the end."""
    if len(a) < len(b):
        a, b = b, a
    b = b + [x for _ in range((len(a) - len(b)) // 2) for x in ([], {})]
    out = []
    for k, (x, y) in enumerate(zip(a, b)):
        if k % 2 == 0:
            out.append({**x, **y})
        else:
            out.append(sorted(x + y, key=lambda p: (p.i, p.j)))
    return out


def _decompose_node(w: np.ndarray, node: SplitNode, b: int, tol: Tolerances) -> list:
    if node.is_leaf:
        return [{node.lo: w}]
    half = node.size // 2
    res = cosine_sine_decompose(w, half * b, tol)
    split = half * b
    u = _merge(
        _decompose_node(res.U1, node.left, b, tol),
        _decompose_node(res.U2, node.right, b, tol),
    )
    v = _merge(
        _decompose_node(res.V1, node.left, b, tol),
        _decompose_node(res.V2, node.right, b, tol),
    )
    gamma = [
        CoupledPair(i, j, res.thetas[k * b : (k + 1) * b].copy())
        for k, (i, j) in enumerate(node.pairs())
    ]
    assert len(res.thetas) == split
    return u + [gamma] + v


def multilevel_decompose(
    w, spec: QuditSpec, tol: Tolerances = DEFAULT_TOLERANCES, identity_atol: float = 1e-12
) -> FactorSequence:
    """Balanced-split multilevel CSD of a ``d^n`` unitary into block and CS factors."""
    if spec.n < 2:
        raise ValueError("multilevel decomposition needs n >= 2")
    w = require_unitary(w, tol, "input")
    if w.shape[0] != spec.dim:
        raise ValueError(f"matrix dimension {w.shape[0]} != d^n = {spec.dim}")
    b = spec.d ** (spec.n - 1)
    raw = _decompose_node(w, build_split_tree(spec.d).root, b, tol)
    factors = []
    for k, item in enumerate(raw):
        if k % 2 == 0:
            blocks = [item.get(lv) for lv in range(spec.d)]
            blocks = [None if is_identity(m, identity_atol) else m for m in blocks]
            factors.append(BlockFactor(blocks))
        else:
            factors.append(CosineSineFactor(item))
    fs = FactorSequence(spec, factors)
    return fs


def check_reconstruction(fs: FactorSequence, w, tol: Tolerances = DEFAULT_TOLERANCES) -> float:
    err = phase_distance(fs.matrix(), w)
    if err > tol.reconstruction_tol:
        raise NumericalError(f"factor sequence reconstruction residual {err:.3e}")
    return err
