"""Signed multi-qubit Pauli operators in binary symplectic form.

A :class:`PauliString` stores one x-bit and one z-bit per qubit plus a phase
exponent ``k`` so that the operator equals ``i**k`` times the tensor product of
single-qubit letters (``(1, 0) -> X``, ``(0, 1) -> Z``, ``(1, 1) -> Y``).
Qubits are labelled 1..n; qubit ``j`` lives in bit ``j - 1`` of both masks.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Mapping

_BITS = {"I": (0, 0), "X": (1, 0), "Z": (0, 1), "Y": (1, 1)}
_PHASE_TEXT = {0: "", 1: "i", 2: "-", 3: "-i"}
_TERM_RE = re.compile(r"([XYZ])(\d+)")
_TEXT_RE = re.compile(r"^\s*([+-]?)(i?)((?:[XYZ]\d+)+|I)\s*$")


class PauliError(ValueError):
    """Raised for malformed Pauli strings, frames, or mismatched qubit counts."""


def _popcount(v: int) -> int:
    return bin(v).count("1")


@dataclass(frozen=True)
class PauliString:
    """An n-qubit Pauli operator ``i**phase * P_1 (x) ... (x) P_n``."""

    n: int
    x: int = 0
    z: int = 0
    phase: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise PauliError(f"qubit count must be positive, got {self.n}")
        full = (1 << self.n) - 1
        if self.x & ~full or self.z & ~full:
            raise PauliError("bit masks exceed the qubit count")
        object.__setattr__(self, "phase", self.phase % 4)

    # -- construction -----------------------------------------------------
    @classmethod
    def identity(cls, n: int) -> "PauliString":
        return cls(n)

    @classmethod
    def from_letters(cls, letters: str, phase: int = 0) -> "PauliString":
        """Build from a dense letter sequence, e.g. ``"XZIIZI"`` (qubit 1 first)."""
        x = z = 0
        for j, c in enumerate(letters.upper()):
            try:
                bx, bz = _BITS[c]
            except KeyError:
                raise PauliError(f"invalid Pauli letter {c!r}") from None
            x |= bx << j
            z |= bz << j
        return cls(len(letters), x, z, phase)

    @classmethod
    def from_sparse(cls, n: int, terms: Mapping[int, str], sign: int = 1) -> "PauliString":
        """Build from ``{qubit: letter}`` with 1-based qubit labels."""
        letters = ["I"] * n
        for q, c in terms.items():
            if not 1 <= q <= n:
                raise PauliError(f"qubit {q} outside 1..{n}")
            letters[q - 1] = c
        if sign not in (1, -1):
            raise PauliError("sign must be +1 or -1")
        return cls.from_letters("".join(letters), 0 if sign == 1 else 2)

    @classmethod
    def parse(cls, text: str, n: int) -> "PauliString":
        """Parse the subscripted rendering, e.g. ``"-Z3Z6"`` or ``"I"``."""
        m = _TEXT_RE.match(text)
        if not m:
            raise PauliError(f"cannot parse Pauli string {text!r}")
        sign, imag, body = m.groups()
        phase = (2 if sign == "-" else 0) + (1 if imag else 0)
        if body == "I":
            return cls(n, 0, 0, phase)
        terms: dict[int, str] = {}
        for letter, idx in _TERM_RE.findall(body):
            q = int(idx)
            if q in terms:
                raise PauliError(f"qubit {q} repeated in {text!r}")
            terms[q] = letter
        p = cls.from_sparse(n, terms)
        return cls(n, p.x, p.z, phase)

    # -- views ------------------------------------------------------------
    def letter(self, q: int) -> str:
        """Letter acting on 1-based qubit ``q``."""
        b = q - 1
        return "IXZY"[((self.x >> b) & 1) | (((self.z >> b) & 1) << 1)]

    @property
    def letters(self) -> str:
        return "".join(self.letter(q) for q in range(1, self.n + 1))

    @property
    def support(self) -> tuple[int, ...]:
        mask = self.x | self.z
        return tuple(q for q in range(1, self.n + 1) if mask >> (q - 1) & 1)

    @property
    def weight(self) -> int:
        return _popcount(self.x | self.z)

    @property
    def coefficient(self) -> complex:
        return (1, 1j, -1, -1j)[self.phase]

    @property
    def is_hermitian(self) -> bool:
        return self.phase % 2 == 0

    @property
    def sign(self) -> int:
        """Real sign of a Hermitian string."""
        if not self.is_hermitian:
            raise PauliError(f"{self} has an imaginary phase")
        return 1 if self.phase == 0 else -1

    @property
    def is_identity(self) -> bool:
        return self.x == 0 and self.z == 0

    def unsigned(self) -> "PauliString":
        return PauliString(self.n, self.x, self.z, 0)

    def restrict(self, qubits) -> "PauliString":
        """Restrict to the given qubits (relabelled 1..len) keeping the phase."""
        letters = "".join(self.letter(q) for q in qubits)
        return PauliString.from_letters(letters, self.phase)

    def __str__(self) -> str:
        prefix = _PHASE_TEXT[self.phase]
        if self.is_identity:
            return prefix + "I"
        return prefix + "".join(f"{self.letter(q)}{q}" for q in self.support)

    def __repr__(self) -> str:
        return f"PauliString({str(self)!r}, n={self.n})"

    def __mul__(self, other: "PauliString") -> "PauliString":
        return multiply(self, other)

    def __neg__(self) -> "PauliString":
        return PauliString(self.n, self.x, self.z, self.phase + 2)


def _check_dims(a: PauliString, b: PauliString) -> None:
    if a.n != b.n:
        raise PauliError(f"qubit count mismatch: {a.n} vs {b.n}")


def multiply(a: PauliString, b: PauliString) -> PauliString:
    """Operator product ``a * b`` with exact phase.

    Works in the ordered form ``i**e X^x Z^z`` where ``e = phase + |x & z|``;
    moving ``Z^z1`` past ``X^x2`` costs ``(-1)**|z1 & x2|``.
    """
    _check_dims(a, b)
    e = (a.phase + _popcount(a.x & a.z)) + (b.phase + _popcount(b.x & b.z))
    e += 2 * _popcount(a.z & b.x)
    x, z = a.x ^ b.x, a.z ^ b.z
    return PauliString(a.n, x, z, e - _popcount(x & z))


def commutes(a: PauliString, b: PauliString) -> bool:
    _check_dims(a, b)
    return _popcount((a.x & b.z) ^ (a.z & b.x)) % 2 == 0


@dataclass(frozen=True)
class SingleQubitFrame:
    """Images of X and Z under a single-qubit Clifford relabelling.

    Each image is ``(sign, letter)``. The image of Y follows from ``Y = iXZ``
    and must come out with a real sign.
    """

    image_of_X: tuple[int, str] = (1, "X")
    image_of_Z: tuple[int, str] = (1, "Z")

    def __post_init__(self):
        for sign, letter in (self.image_of_X, self.image_of_Z):
            if sign not in (1, -1) or letter not in "XYZ" or len(letter) != 1:
                raise PauliError(f"invalid frame image {(sign, letter)!r}")
        if self.image_of_X[1] == self.image_of_Z[1]:
            raise PauliError("X and Z images must anticommute (distinct letters)")

    @property
    def image_of_Y(self) -> tuple[int, str]:
        (sx, lx), (sz, lz) = self.image_of_X, self.image_of_Z
        prod = multiply(PauliString.from_letters(lx), PauliString.from_letters(lz))
        phase = (prod.phase + 1) % 4  # the leading i of Y = iXZ
        # distinct letters multiply to +-i times the third letter, so phase is real
        return (sx * sz * (1 if phase == 0 else -1), prod.letters)

    def image(self, letter: str) -> tuple[int, str]:
        if letter == "I":
            return (1, "I")
        return {"X": self.image_of_X, "Y": self.image_of_Y, "Z": self.image_of_Z}[letter]

    @property
    def is_identity(self) -> bool:
        return self.image_of_X == (1, "X") and self.image_of_Z == (1, "Z")


def apply_frame(p: PauliString, frames: Mapping[int, SingleQubitFrame]) -> PauliString:
    """Replace each local letter by its frame image; signs go into the phase."""
    letters = list(p.letters)
    phase = p.phase
    for q, frame in frames.items():
        if not 1 <= q <= p.n:
            raise PauliError(f"frame qubit {q} outside 1..{p.n}")
        if not isinstance(frame, SingleQubitFrame):
            raise PauliError(f"frame for qubit {q} is not a SingleQubitFrame")
        sign, letters[q - 1] = frame.image(letters[q - 1])
        if sign == -1:
            phase += 2
    return PauliString.from_letters("".join(letters), phase)
