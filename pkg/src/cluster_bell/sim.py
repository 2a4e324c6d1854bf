"""Dense state-vector / density-matrix simulation for small registers.

Basis index ordering is big-endian: qubit 1 is the most significant bit.
States are immutable; every operation returns a new :class:`QuantumState`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .graphs import GraphSpec, builtin_graph
from .pauli import PauliString

MAX_QUBITS = 12
_TOL = 1e-10

_SQ2 = 1 / np.sqrt(2)
GATES = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
    "H": np.array([[_SQ2, _SQ2], [_SQ2, -_SQ2]], dtype=complex),
    "S": np.array([[1, 0], [0, 1j]], dtype=complex),
}
# rotate the +1/-1 eigenbasis of each Pauli onto |0>/|1>
_BASIS_CHANGE = {
    "Z": GATES["I"],
    "X": GATES["H"],
    "Y": GATES["H"] @ GATES["S"].conj().T,
}


class SimulationError(ValueError):
    pass


@dataclass(frozen=True)
class NoiseSpec:
    """White-noise mixing weight on the pure state plus per-qubit phase flips."""

    white_noise_p: float = 1.0
    dephasing: Mapping[int, float] = field(default_factory=dict)

    def __post_init__(self):
        if not 0.0 <= self.white_noise_p <= 1.0:
            raise SimulationError(f"white_noise_p must lie in [0, 1], got {self.white_noise_p}")
        for q, prob in self.dephasing.items():
            if not 0.0 <= prob <= 0.5:
                raise SimulationError(f"dephasing on qubit {q} must lie in [0, 0.5], got {prob}")


@dataclass(frozen=True, eq=False)
class QuantumState:
    """A pure state vector or a density matrix on ``n`` qubits.

    ``labels`` are the original qubit labels of each tensor factor, so a
    reduced state still answers queries phrased on the full register.
    """

    data: np.ndarray
    labels: tuple[int, ...] = ()

    def __post_init__(self):
        data = np.array(self.data, dtype=complex)
        if data.ndim not in (1, 2):
            raise SimulationError("state data must be a vector or a square matrix")
        dim = data.shape[0]
        n = dim.bit_length() - 1
        if dim != 1 << n or (data.ndim == 2 and data.shape != (dim, dim)):
            raise SimulationError(f"dimension {data.shape} is not a power of two")
        if n > MAX_QUBITS:
            raise SimulationError(f"{n} qubits exceeds the cap of {MAX_QUBITS}")
        labels = tuple(self.labels) or tuple(range(1, n + 1))
        if len(labels) != n:
            raise SimulationError("labels do not match the qubit count")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return len(self.labels)

    @property
    def is_density(self) -> bool:
        return self.data.ndim == 2

    @property
    def form(self) -> str:
        return "density" if self.is_density else "vector"

    def density_matrix(self) -> np.ndarray:
        if self.is_density:
            return self.data
        return np.outer(self.data, self.data.conj())

    def as_density(self) -> "QuantumState":
        return self if self.is_density else QuantumState(self.density_matrix(), self.labels)

    def validate(self, tol: float = _TOL) -> None:
        if self.is_density:
            rho = self.data
            if np.abs(rho - rho.conj().T).max() > tol:
                raise SimulationError("density matrix is not Hermitian")
            if abs(np.trace(rho) - 1) > tol:
                raise SimulationError("density matrix trace differs from 1")
            if np.linalg.eigvalsh(rho).min() < -tol:
                raise SimulationError("density matrix is not positive semidefinite")
        elif abs(np.linalg.norm(self.data) - 1) > tol:
            raise SimulationError("state vector is not normalised")


def _check_cap(n: int) -> None:
    if n > MAX_QUBITS:
        raise SimulationError(f"{n} qubits exceeds the cap of {MAX_QUBITS}")


def basis_bits(n: int) -> np.ndarray:
    """``(2**n, n)`` array; column j holds the bit of qubit j + 1."""
    idx = np.arange(1 << n)
    return (idx[:, None] >> np.arange(n - 1, -1, -1)) & 1


def build_graph_state(g: GraphSpec) -> QuantumState:
    """CZ on every edge applied to the all-plus state."""
    _check_cap(g.n)
    bits = basis_bits(g.n)
    parity = np.zeros(1 << g.n, dtype=int)
    for u, v in g.edges:
        parity ^= bits[:, u - 1] & bits[:, v - 1]
    amp = (1 - 2 * parity) / np.sqrt(1 << g.n)
    return QuantumState(amp.astype(complex))


def _product_ket(n: int, assignment: Mapping[int, int]) -> np.ndarray:
    v = np.zeros(1 << n, dtype=complex)
    v[int("".join(str(assignment[q]) for q in range(1, n + 1)), 2)] = 1
    return v


def hyperentangled_tilde() -> QuantumState:
    """(|EE>+|II>) (x) (|HH>-|VV>) (x) (|lr>+|rl>), normalised, in qubit encoding.

    Photon A carries qubits 1 (E/I), 2 (H/V), 3 (r/l); photon B carries 4, 5, 6.
    E, H, r map to 0 and I, V, l map to 1.
    """
    psi = np.zeros(64, dtype=complex)
    for m1 in (0, 1):
        for pol, sign in ((0, 1), (1, -1)):
            for r_a, r_b in ((1, 0), (0, 1)):
                bits = {1: m1, 4: m1, 2: pol, 5: pol, 3: r_a, 6: r_b}
                psi += sign * _product_ket(6, bits)
    return QuantumState(psi / np.linalg.norm(psi))


def build_named_state(name: str) -> QuantumState:
    key = name.upper().replace("-", "_")
    he = hyperentangled_tilde()
    if key == "HE6_TILDE":
        return he
    if key == "LC6_TILDE":
        return apply_gate(apply_gate(he, "CX", (1, 2)), "CZ", (6, 5))
    if key in ("HE6", "LC6"):
        return build_graph_state(builtin_graph(key))
    raise SimulationError(f"unknown state {name!r}")


def _positions(s: QuantumState, qubits) -> list[int]:
    pos = []
    for q in qubits:
        if q not in s.labels:
            raise SimulationError(f"qubit {q} not in state (labels {s.labels})")
        pos.append(s.labels.index(q))
    if len(set(pos)) != len(pos):
        raise SimulationError("gate qubits must be distinct")
    return pos


def _apply_local(tensor: np.ndarray, u: np.ndarray, axes: list[int]) -> np.ndarray:
    k = len(axes)
    u = u.reshape((2,) * (2 * k))
    out = np.tensordot(u, tensor, axes=(list(range(k, 2 * k)), axes))
    return np.moveaxis(out, list(range(k)), axes)


def _apply_unitary(s: QuantumState, u: np.ndarray, qubits) -> QuantumState:
    axes = _positions(s, qubits)
    n = s.n
    if not s.is_density:
        t = _apply_local(s.data.reshape((2,) * n), u, axes)
        return QuantumState(t.reshape(-1), s.labels)
    t = s.data.reshape((2,) * (2 * n))
    t = _apply_local(t, u, axes)
    t = _apply_local(t, u.conj(), [a + n for a in axes])
    return QuantumState(t.reshape(1 << n, 1 << n), s.labels)


def _controlled(target: np.ndarray) -> np.ndarray:
    m = np.eye(4, dtype=complex)
    m[2:, 2:] = target
    return m


def apply_gate(s: QuantumState, gate, qubits) -> QuantumState:
    """Apply a named gate or a 2x2 unitary.

    ``gate`` is one of H, X, Y, Z, S (``qubits`` an int), CZ or CX (``qubits``
    a ``(control, target)`` pair), or a 2x2 array applied to one qubit.
    """
    if isinstance(gate, str):
        name = gate.upper()
        if name in ("CZ", "CX", "CNOT"):
            pair = tuple(qubits)
            if len(pair) != 2:
                raise SimulationError(f"{name} needs a (control, target) pair")
            u = _controlled(GATES["Z"] if name == "CZ" else GATES["X"])
            return _apply_unitary(s, u, pair)
        if name not in GATES:
            raise SimulationError(f"unknown gate {gate!r}")
        u = GATES[name]
    else:
        u = np.asarray(gate, dtype=complex)
        if u.shape != (2, 2):
            raise SimulationError("arbitrary gates must be 2x2")
        if np.abs(u @ u.conj().T - np.eye(2)).max() > 1e-8:
            raise SimulationError("gate matrix is not unitary")
    if not isinstance(qubits, (int, np.integer)):
        (qubits,) = qubits
    return _apply_unitary(s, u, [int(qubits)])


def _z_signs(s: QuantumState, q: int) -> np.ndarray:
    pos = _positions(s, [q])[0]
    return 1 - 2 * basis_bits(s.n)[:, pos]


def apply_noise(s: QuantumState, spec: NoiseSpec) -> QuantumState:
    """White noise ``p rho + (1 - p) I / 2**n``, then independent phase flips."""
    rho = spec.white_noise_p * s.density_matrix()
    rho = rho + (1 - spec.white_noise_p) * np.eye(1 << s.n) / (1 << s.n)
    for q, prob in sorted(spec.dephasing.items()):
        z = _z_signs(s, q)
        rho = (1 - prob) * rho + prob * (z[:, None] * rho * z[None, :])
    return QuantumState(rho, s.labels)


def _pauli_on_state(s: QuantumState, p: PauliString) -> PauliString:
    if p.n == s.n and s.labels == tuple(range(1, s.n + 1)):
        return p
    if set(p.support) - set(s.labels):
        raise SimulationError(f"{p} acts on qubits absent from the state {s.labels}")
    if p.n < max(s.labels):
        raise SimulationError(f"{p} has {p.n} qubits, state labels reach {max(s.labels)}")
    return p.restrict(s.labels)


def pauli_action(p: PauliString) -> tuple[np.ndarray, np.ndarray]:
    """``P|b> = coef[b] |b ^ flip>``; returns ``(flip index per b, coef)``."""
    n = p.n
    bits = basis_bits(n)
    xb = np.array([(p.x >> q) & 1 for q in range(n)])
    zb = np.array([(p.z >> q) & 1 for q in range(n)])
    flip_mask = int("".join(map(str, xb)), 2)
    y_count = int(np.sum(xb & zb))
    z_par = (bits @ zb) & 1
    coef = p.coefficient * (1j ** y_count) * (1 - 2 * z_par)
    return np.arange(1 << n) ^ flip_mask, coef


def pauli_matrix(p: PauliString) -> np.ndarray:
    flip, coef = pauli_action(p)
    m = np.zeros((1 << p.n, 1 << p.n), dtype=complex)
    m[flip, np.arange(1 << p.n)] = coef
    return m


def expectation(s: QuantumState, p: PauliString) -> float:
    """``<psi|P|psi>`` or ``tr(rho P)``; the real part for Hermitian ``P``."""
    q = _pauli_on_state(s, p)
    flip, coef = pauli_action(q)
    if s.is_density:
        val = np.sum(coef * s.data[np.arange(1 << s.n), flip])
    else:
        val = np.vdot(s.data[flip], coef * s.data)
    if q.is_hermitian:
        return float(val.real)
    return complex(val)


def partial_trace(s: QuantumState, drop) -> QuantumState:
    drop = sorted(set(drop))
    if not drop:
        raise SimulationError("nothing to trace out")
    pos = _positions(s, drop)
    if len(pos) == s.n:
        raise SimulationError("cannot trace out every qubit")
    n = s.n
    keep = [i for i in range(n) if i not in pos]
    t = s.density_matrix().reshape((2,) * (2 * n))
    letters = [chr(ord("a") + i) for i in range(2 * n)]
    for i in pos:
        letters[i + n] = letters[i]
    out = [letters[i] for i in keep] + [letters[i + n] for i in keep]
    reduced = np.einsum("".join(letters) + "->" + "".join(out), t)
    m = 1 << len(keep)
    return QuantumState(reduced.reshape(m, m), tuple(s.labels[i] for i in keep))


def outcome_probabilities(s: QuantumState, setting: Mapping[int, str]) -> np.ndarray:
    """Born probabilities of the joint local-Pauli measurement, big-endian order.

    Qubits missing from ``setting`` are measured in Z.
    """
    rotated = s
    for q in s.labels:
        letter = setting.get(q, "Z").upper()
        if letter not in _BASIS_CHANGE:
            raise SimulationError(f"cannot measure {letter!r} on qubit {q}")
        if letter != "Z":
            rotated = _apply_unitary(rotated, _BASIS_CHANGE[letter], [q])
    if rotated.is_density:
        probs = np.real(np.diag(rotated.data))
    else:
        probs = np.abs(rotated.data) ** 2
    probs = np.clip(probs, 0.0, None)
    return probs / probs.sum()


def sample_setting(s: QuantumState, setting: Mapping[int, str], shots: int, seed) -> dict[tuple[int, ...], int]:
    """Draw ``shots`` i.i.d. outcomes by inverse CDF; returns ``{outcome: count}``.

    Outcomes are tuples of +1/-1 ordered by ``s.labels``. ``seed`` may be an
    int or a ``numpy.random.SeedSequence``.
    """
    if shots < 1:
        raise SimulationError("shots must be positive")
    probs = outcome_probabilities(s, setting)
    rng = np.random.default_rng(seed)
    cdf = np.cumsum(probs)
    cdf[-1] = 1.0
    idx = np.searchsorted(cdf, rng.random(shots), side="right")
    counts = np.bincount(idx, minlength=probs.size)
    signs = 1 - 2 * basis_bits(s.n)
    return {tuple(int(v) for v in signs[i]): int(c) for i, c in enumerate(counts) if c}


# -- text dump -------------------------------------------------------------

def dump_state(s: QuantumState) -> str:
    """Header ``n=<count> form=vector|density`` then ``index re im`` lines.

    Density matrices use the row-major flat index ``row * 2**n + col``.
    """
    lines = [f"n={s.n} form={s.form}"]
    for i, a in enumerate(s.data.reshape(-1)):
        lines.append(f"{i} {float(a.real)!r} {float(a.imag)!r}")
    return "\n".join(lines) + "\n"


def load_state(text: str) -> QuantumState:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    try:
        head = dict(tok.split("=", 1) for tok in lines[0].split())
        n, form = int(head["n"]), head["form"]
    except (IndexError, KeyError, ValueError):
        raise SimulationError("state dump needs an 'n=<count> form=<form>' header") from None
    size = (1 << n) ** (2 if form == "density" else 1)
    flat = np.zeros(size, dtype=complex)
    for lineno, ln in enumerate(lines[1:], start=2):
        try:
            i, re, im = ln.split()
            flat[int(i)] = complex(float(re), float(im))
        except (ValueError, IndexError):
            raise SimulationError(f"line {lineno}: malformed amplitude {ln!r}") from None
    if form == "density":
        return QuantumState(flat.reshape(1 << n, 1 << n))
    if form != "vector":
        raise SimulationError(f"unknown form {form!r}")
    return QuantumState(flat)
