"""Pauli algebra on bitmask-encoded Pauli strings.

A Pauli string on ``n`` qubits is stored as two Python integers used as
bitsets (bit ``q`` of ``x_mask``/``z_mask`` marks an X/Z component on qubit
``q``) together with a global phase ``i**phase``. A qubit with both bits set
carries a ``Y`` (not ``XZ``), so the phase is the displayed coefficient.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

_PHASE_STR = {0: "+", 1: "+i", 2: "-", 3: "-i"}
_CHAR = {(0, 0): "I", (1, 0): "X", (0, 1): "Z", (1, 1): "Y"}


def _popcount(v: int) -> int:
    return v.bit_count()


def _mask(qubits: Iterable[int]) -> int:
    m = 0
    for q in qubits:
        m |= 1 << int(q)
    return m


@dataclass(frozen=True)
class PauliString:
    """An n-qubit Pauli operator ``i**phase * P_0 ⊗ ... ⊗ P_{n-1}``.

    Attributes:
        n_qubits: Number of addressable qubits.
        x_mask: Bitset of qubits with an X or Y component.
        z_mask: Bitset of qubits with a Z or Y component.
        phase: Exponent ``k`` of the coefficient ``i**k`` (0, 1, 2 or 3).
    """

    n_qubits: int
    x_mask: int = 0
    z_mask: int = 0
    phase: int = 0

    def __post_init__(self):
        if self.n_qubits < 0:
            raise ValueError("n_qubits must be non-negative")
        limit = 1 << self.n_qubits
        if self.x_mask < 0 or self.z_mask < 0 or self.x_mask >= limit or self.z_mask >= limit:
            raise ValueError(f"masks exceed {self.n_qubits} qubits")
        object.__setattr__(self, "phase", self.phase % 4)

    # -- constructors -------------------------------------------------------
    @classmethod
    def identity(cls, n_qubits: int) -> "PauliString":
        return cls(n_qubits)

    @classmethod
    def from_str(cls, text: str) -> "PauliString":
        """Parse strings such as ``"XZIY"``, ``"-XX"`` or ``"+iZ_Z"``."""
        s = text.strip()
        phase = 0
        for prefix, k in (("+i", 1), ("-i", 3), ("i", 1), ("+", 0), ("-", 2)):
            if s.startswith(prefix):
                phase = k
                s = s[len(prefix):]
                break
        x = z = 0
        for q, ch in enumerate(s):
            if ch in "XY":
                x |= 1 << q
            if ch in "ZY":
                z |= 1 << q
            if ch not in "IXYZ_":
                raise ValueError(f"invalid Pauli character {ch!r} in {text!r}")
        return cls(len(s), x, z, phase)

    @classmethod
    def from_support(cls, n_qubits: int, x: Iterable[int] = (), z: Iterable[int] = (),
                     phase: int = 0) -> "PauliString":
        """Build from lists of qubits carrying X and Z components (Y = both)."""
        return cls(n_qubits, _mask(x), _mask(z), phase)

    # -- views --------------------------------------------------------------
    @property
    def coefficient(self) -> complex:
        return 1j ** self.phase

    @property
    def weight(self) -> int:
        return _popcount(self.x_mask | self.z_mask)

    @property
    def support(self) -> list[int]:
        m = self.x_mask | self.z_mask
        return [q for q in range(self.n_qubits) if m >> q & 1]

    def is_identity(self) -> bool:
        return self.x_mask == 0 and self.z_mask == 0 and self.phase == 0

    def is_x_type(self) -> bool:
        return self.z_mask == 0

    def is_z_type(self) -> bool:
        return self.x_mask == 0

    def sign_free(self) -> "PauliString":
        return PauliString(self.n_qubits, self.x_mask, self.z_mask, 0)

    def __str__(self) -> str:
        body = "".join(_CHAR[(self.x_mask >> q & 1, self.z_mask >> q & 1)]
                       for q in range(self.n_qubits))
        return _PHASE_STR[self.phase] + body

    def __mul__(self, other: "PauliString") -> "PauliString":
        return pauli_mul(self, other)

    def to_matrix(self):
        """Dense matrix (qubit 0 is the most significant tensor factor)."""
        import numpy as np

        single = {
            "I": np.eye(2, dtype=complex),
            "X": np.array([[0, 1], [1, 0]], dtype=complex),
            "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
            "Z": np.array([[1, 0], [0, -1]], dtype=complex),
        }
        out = np.array([[1.0 + 0j]])
        for ch in str(self.sign_free())[1:]:
            out = np.kron(out, single[ch])
        return self.coefficient * out


def _check_sizes(a: PauliString, b: PauliString) -> None:
    if a.n_qubits != b.n_qubits:
        raise ValueError(f"size mismatch: {a.n_qubits} vs {b.n_qubits} qubits")


def pauli_mul(a: PauliString, b: PauliString) -> PauliString:
    """Return the group product ``a · b`` including its phase."""
    _check_sizes(a, b)
    ax, az = a.x_mask & ~a.z_mask, a.z_mask & ~a.x_mask
    ay = a.x_mask & a.z_mask
    bx, bz = b.x_mask & ~b.z_mask, b.z_mask & ~b.x_mask
    by = b.x_mask & b.z_mask
    # XY = iZ, YZ = iX, ZX = iY; reversed orders give -i.
    plus = (ax & by) | (ay & bz) | (az & bx)
    minus = (ax & bz) | (az & by) | (ay & bx)
    phase = a.phase + b.phase + _popcount(plus) - _popcount(minus)
    return PauliString(a.n_qubits, a.x_mask ^ b.x_mask, a.z_mask ^ b.z_mask, phase)


def commutes(a: PauliString, b: PauliString) -> bool:
    """True iff ``a`` and ``b`` commute (even symplectic inner product)."""
    _check_sizes(a, b)
    return _popcount((a.x_mask & b.z_mask) ^ (a.z_mask & b.x_mask)) % 2 == 0


@dataclass(frozen=True)
class PauliFrame:
    """Sign-free Pauli difference between a noisy run and the reference run."""

    x_mask: int = 0
    z_mask: int = 0

    def is_empty(self) -> bool:
        return self.x_mask == 0 and self.z_mask == 0

    def as_pauli(self, n_qubits: int) -> PauliString:
        return PauliString(n_qubits, self.x_mask, self.z_mask)
