"""Gate IR, circuit container, matrix evaluator and the text formats.

Basis ordering: qudit 0 is the most significant digit of a basis index, so a
``d^n`` matrix splits into ``d x d`` blocks of size ``d^(n-1)`` indexed by the
state of qudit 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Union

import numpy as np

from .numerics import phase_distance  # noqa: F401  (re-exported)

DEFAULT_EVALUATION_CAP = 4096


class CircuitFormatError(ValueError):
    """Malformed circuit or matrix text."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class EvaluationCapExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class QuditSpec:
    n: int
    d: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"qudit count must be >= 1, got {self.n}")
        if self.d < 2:
            raise ValueError(f"qudit dimension must be >= 2, got {self.d}")

    @property
    def dim(self) -> int:
        return self.d**self.n


# ---------------------------------------------------------------------------
# gates


@dataclass(frozen=True, eq=False)
class OneQudit:
    q: int
    matrix: np.ndarray

    def __eq__(self, other):
        return (
            isinstance(other, OneQudit)
            and self.q == other.q
            and np.array_equal(self.matrix, other.matrix)
        )

    def __hash__(self):
        return hash((self.q, self.matrix.tobytes()))


@dataclass(frozen=True)
class GCX:
    """``X^(ij)`` on target ``t`` iff control ``c`` is in state ``m``."""

    c: int
    t: int
    m: int
    i: int
    j: int


@dataclass(frozen=True)
class GCZ:
    """Phase -1 on the single basis state ``|m>_c |mp>_t``; symmetric in c and t."""

    c: int
    t: int
    m: int
    mp: int


@dataclass(frozen=True)
class RotY:
    """Real rotation ``[[cos(a/2), -sin(a/2)], [sin(a/2), cos(a/2)]]`` on levels (i, j)."""

    q: int
    i: int
    j: int
    theta: float


@dataclass(frozen=True)
class RotPhase:
    """Relative phase ``diag(e^{-i phi/2}, e^{i phi/2})`` on levels (i, j)."""

    q: int
    i: int
    j: int
    phi: float


Gate = Union[OneQudit, GCX, GCZ, RotY, RotPhase]
TWO_QUDIT = (GCX, GCZ)


def validate_gate(g: Gate, spec: QuditSpec) -> None:
    n, d = spec.n, spec.d

    def idx(q):
        if not 0 <= q < n:
            raise ValueError(f"qudit index {q} out of range for n={n}: {g!r}")

    def lvl(v):
        if not 0 <= v < d:
            raise ValueError(f"level {v} out of range for d={d}: {g!r}")

    if isinstance(g, OneQudit):
        idx(g.q)
        if g.matrix.shape != (d, d):
            raise ValueError(f"one-qudit matrix must be {d}x{d}, got {g.matrix.shape}")
    elif isinstance(g, GCX):
        idx(g.c), idx(g.t), lvl(g.m), lvl(g.i), lvl(g.j)
        if g.c == g.t:
            raise ValueError(f"control equals target: {g!r}")
        if not g.i < g.j:
            raise ValueError(f"GCX levels must satisfy i < j: {g!r}")
    elif isinstance(g, GCZ):
        idx(g.c), idx(g.t), lvl(g.m), lvl(g.mp)
        if g.c == g.t:
            raise ValueError(f"control equals target: {g!r}")
    elif isinstance(g, (RotY, RotPhase)):
        idx(g.q), lvl(g.i), lvl(g.j)
        if not g.i < g.j:
            raise ValueError(f"two-level gate needs i < j: {g!r}")
    else:
        raise TypeError(f"not a gate: {g!r}")


def x_matrix(d: int, i: int, j: int) -> np.ndarray:
    x = np.eye(d, dtype=np.complex128)
    x[[i, j]] = x[[j, i]]
    return x


def z_matrix(d: int, m: int) -> np.ndarray:
    z = np.eye(d, dtype=np.complex128)
    z[m, m] = -1
    return z


def hadamard_matrix(d: int, i: int, j: int) -> np.ndarray:
    """Generalized Hadamard ``H^(ij)``: the qubit Hadamard on levels i, j."""
    h = np.eye(d, dtype=np.complex128)
    s = 1 / np.sqrt(2)
    h[i, i], h[i, j], h[j, i], h[j, j] = s, s, s, -s
    return h


def roty_matrix(d: int, i: int, j: int, theta: float) -> np.ndarray:
    r = np.eye(d, dtype=np.complex128)
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    r[i, i], r[i, j], r[j, i], r[j, j] = c, -s, s, c
    return r


def rotphase_matrix(d: int, i: int, j: int, phi: float) -> np.ndarray:
    r = np.eye(d, dtype=np.complex128)
    r[i, i] = np.exp(-0.5j * phi)
    r[j, j] = np.exp(0.5j * phi)
    return r


# ---------------------------------------------------------------------------
# evaluation


def _apply(tensor: np.ndarray, g: Gate, d: int) -> np.ndarray:
    """Left-multiply the reshaped matrix ``tensor`` (axes: n qudits + columns) by ``g``."""
    if isinstance(g, GCX):
        view = np.moveaxis(tensor, (g.c, g.t), (0, 1))
        view[g.m, [g.i, g.j]] = view[g.m, [g.j, g.i]]
        return tensor
    if isinstance(g, GCZ):
        view = np.moveaxis(tensor, (g.c, g.t), (0, 1))
        view[g.m, g.mp] *= -1
        return tensor
    if isinstance(g, RotY):
        view = np.moveaxis(tensor, g.q, 0)
        c, s = math.cos(g.theta / 2), math.sin(g.theta / 2)
        a, b = view[g.i].copy(), view[g.j].copy()
        view[g.i] = c * a - s * b
        view[g.j] = s * a + c * b
        return tensor
    if isinstance(g, RotPhase):
        view = np.moveaxis(tensor, g.q, 0)
        view[g.i] *= np.exp(-0.5j * g.phi)
        view[g.j] *= np.exp(0.5j * g.phi)
        return tensor
    if isinstance(g, OneQudit):
        out = np.tensordot(g.matrix, tensor, axes=([1], [g.q]))
        return np.ascontiguousarray(np.moveaxis(out, 0, g.q))
    raise TypeError(f"not a gate: {g!r}")


def apply_gates(matrix: np.ndarray, gates: Iterable[Gate], spec: QuditSpec) -> np.ndarray:
    """``G_last ... G_1 @ matrix`` for gates listed in application order."""
    cols = matrix.shape[1]
    tensor = np.array(matrix, dtype=np.complex128).reshape((spec.d,) * spec.n + (cols,))
    for g in gates:
        tensor = _apply(tensor, g, spec.d)
    return tensor.reshape(spec.dim, cols)


def gate_matrix(g: Gate, spec: QuditSpec) -> np.ndarray:
    """Full ``d^n x d^n`` embedding of a single gate."""
    validate_gate(g, spec)
    return apply_gates(np.eye(spec.dim, dtype=np.complex128), [g], spec)


@dataclass
class Circuit:
    spec: QuditSpec
    gates: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.gates = list(self.gates)
        for g in self.gates:
            validate_gate(g, self.spec)

    def __len__(self):
        return len(self.gates)

    def inverse(self) -> "Circuit":
        return Circuit(self.spec, [inverse_gate(g) for g in reversed(self.gates)])


def inverse_gate(g: Gate) -> Gate:
    if isinstance(g, OneQudit):
        return OneQudit(g.q, g.matrix.conj().T.copy())
    if isinstance(g, RotY):
        return RotY(g.q, g.i, g.j, -g.theta)
    if isinstance(g, RotPhase):
        return RotPhase(g.q, g.i, g.j, -g.phi)
    return g  # GCX and GCZ are involutions


def evaluate_circuit(c: Circuit, cap: int = DEFAULT_EVALUATION_CAP) -> np.ndarray:
    """Unitary implemented by ``c``; the first listed gate is the rightmost factor."""
    if c.spec.dim > cap:
        raise EvaluationCapExceeded(
            f"d^n = {c.spec.dim} exceeds the evaluation cap of {cap}"
        )
    return apply_gates(np.eye(c.spec.dim, dtype=np.complex128), c.gates, c.spec)


# ---------------------------------------------------------------------------
# counting


@dataclass(frozen=True)
class CountBreakdown:
    gcx: int = 0
    gcz: int = 0
    one_qudit: int = 0
    rot: int = 0

    @property
    def elementary_total(self) -> int:
        return self.gcx + self.gcz

    def as_dict(self) -> dict:
        return {
            "gcx": self.gcx,
            "gcz": self.gcz,
            "one_qudit": self.one_qudit,
            "rot": self.rot,
            "elementary_total": self.elementary_total,
        }


def count_gates(c: Circuit | Iterable[Gate]) -> CountBreakdown:
    gates = c.gates if isinstance(c, Circuit) else list(c)
    gcx = sum(isinstance(g, GCX) for g in gates)
    gcz = sum(isinstance(g, GCZ) for g in gates)
    one = sum(isinstance(g, OneQudit) for g in gates)
    rot = sum(isinstance(g, (RotY, RotPhase)) for g in gates)
    return CountBreakdown(gcx=gcx, gcz=gcz, one_qudit=one, rot=rot)


# ---------------------------------------------------------------------------
# text formats


def _fmt_complex(z: complex) -> str:
    return f"{z.real:.17g},{z.imag:.17g}"


def _parse_complex(tok: str, line: int) -> complex:
    parts = tok.split(",")
    if len(parts) != 2:
        raise CircuitFormatError(f"bad complex token {tok!r}", line)
    try:
        return complex(float(parts[0]), float(parts[1]))
    except ValueError:
        raise CircuitFormatError(f"bad complex token {tok!r}", line) from None


def _fmt_real(x: float) -> str:
    return f"{x:.17g}"


def serialize_circuit(c: Circuit) -> str:
    lines = ["QCIRC 1", f"qudits {c.spec.n} dim {c.spec.d}"]
    for key in sorted(c.metadata):
        lines.append(f"#@ {key} {c.metadata[key]}")
    for g in c.gates:
        if isinstance(g, OneQudit):
            toks = " ".join(_fmt_complex(z) for z in g.matrix.reshape(-1))
            lines.append(f"u1 {g.q} {toks}")
        elif isinstance(g, GCX):
            lines.append(f"gcx {g.c} {g.t} {g.m} {g.i} {g.j}")
        elif isinstance(g, GCZ):
            lines.append(f"gcz {g.c} {g.t} {g.m} {g.mp}")
        elif isinstance(g, RotY):
            lines.append(f"roty {g.q} {g.i} {g.j} {_fmt_real(g.theta)}")
        elif isinstance(g, RotPhase):
            lines.append(f"rph {g.q} {g.i} {g.j} {_fmt_real(g.phi)}")
        else:
            raise TypeError(f"not a gate: {g!r}")
    return "\n".join(lines) + "\n"


def _content_lines(text: str):
    """Yield ``(line_number, tokens)`` skipping blanks and ``#`` comments."""
    for no, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].strip()
        if body:
            yield no, body.split()


def parse_circuit(text: str, spec: QuditSpec | None = None) -> Circuit:
    """Parse the ``QCIRC 1`` format; ``spec``, if given, must match the header."""
    metadata = {}
    for raw in text.splitlines():
        if raw.startswith("#@ "):
            key, _, value = raw[3:].partition(" ")
            metadata[key] = value
    lines = list(_content_lines(text))
    if not lines or lines[0][1] != ["QCIRC", "1"]:
        raise CircuitFormatError("expected header 'QCIRC 1'", lines[0][0] if lines else 1)
    if len(lines) < 2:
        raise CircuitFormatError("missing 'qudits <n> dim <d>' line", lines[0][0] + 1)
    no, toks = lines[1]
    if len(toks) != 4 or toks[0] != "qudits" or toks[2] != "dim":
        raise CircuitFormatError("expected 'qudits <n> dim <d>'", no)
    try:
        header = QuditSpec(n=int(toks[1]), d=int(toks[3]))
    except ValueError as exc:
        raise CircuitFormatError(str(exc), no) from None
    if spec is not None and spec != header:
        raise CircuitFormatError(f"circuit is for {header}, expected {spec}", no)
    d = header.d

    def ints(tokens, count, no):
        if len(tokens) != count:
            raise CircuitFormatError(f"expected {count} integer fields, got {len(tokens)}", no)
        try:
            return [int(t) for t in tokens]
        except ValueError:
            raise CircuitFormatError(f"non-integer field in {tokens}", no) from None

    gates = []
    for no, toks in lines[2:]:
        op, args = toks[0], toks[1:]
        try:
            if op == "u1":
                if len(args) != 1 + d * d:
                    raise CircuitFormatError(f"u1 needs 1 + {d * d} fields", no)
                q = ints(args[:1], 1, no)[0]
                m = np.array([_parse_complex(t, no) for t in args[1:]]).reshape(d, d)
                g = OneQudit(q, m)
            elif op == "gcx":
                g = GCX(*ints(args, 5, no))
            elif op == "gcz":
                g = GCZ(*ints(args, 4, no))
            elif op in ("roty", "rph"):
                if len(args) != 4:
                    raise CircuitFormatError(f"{op} needs 4 fields", no)
                q, i, j = ints(args[:3], 3, no)
                try:
                    angle = float(args[3])
                except ValueError:
                    raise CircuitFormatError(f"bad angle {args[3]!r}", no) from None
                g = RotY(q, i, j, angle) if op == "roty" else RotPhase(q, i, j, angle)
            else:
                raise CircuitFormatError(f"unknown gate {op!r}", no)
            validate_gate(g, header)
        except CircuitFormatError:
            raise
        except ValueError as exc:
            raise CircuitFormatError(str(exc), no) from None
        gates.append(g)
    return Circuit(header, gates, metadata)


def serialize_matrix(m: np.ndarray, comment: str | None = None) -> str:
    m = np.asarray(m, dtype=np.complex128)
    lines = [f"UMAT {m.shape[0]}"]
    if comment:
        lines.append(f"# {comment}")
    for row in m:
        lines.append(" ".join(_fmt_complex(z) for z in row))
    return "\n".join(lines) + "\n"


def parse_matrix(text: str) -> np.ndarray:
    lines = list(_content_lines(text))
    if not lines or len(lines[0][1]) != 2 or lines[0][1][0] != "UMAT":
        raise CircuitFormatError("expected header 'UMAT <dim>'", lines[0][0] if lines else 1)
    try:
        dim = int(lines[0][1][1])
    except ValueError:
        raise CircuitFormatError("bad dimension", lines[0][0]) from None
    if dim < 1:
        raise CircuitFormatError("dimension must be positive", lines[0][0])
    rows = lines[1:]
    if len(rows) != dim:
        last = rows[-1][0] + 1 if rows else lines[0][0] + 1
        raise CircuitFormatError(f"expected {dim} rows, found {len(rows)}", last)
    out = np.empty((dim, dim), dtype=np.complex128)
    for r, (no, toks) in enumerate(rows):
        if len(toks) != dim:
            raise CircuitFormatError(f"expected {dim} entries, found {len(toks)}", no)
        out[r] = [_parse_complex(t, no) for t in toks]
    return out


def matrix_comment_spec(text: str) -> QuditSpec | None:
    """Recover ``QuditSpec`` from a ``# qudits <n> dim <d>`` comment, if present."""
    for raw in text.splitlines():
        toks = raw.lstrip("# ").split()
        if raw.startswith("#") and len(toks) == 4 and toks[0] == "qudits" and toks[2] == "dim":
            try:
                return QuditSpec(n=int(toks[1]), d=int(toks[3]))
            except ValueError:
                return None
    return None
