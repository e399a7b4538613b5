"""Stabilizer tableau simulation for noiseless reference runs.

The tableau follows the CHP layout (destabilizers in rows ``0..n-1``,
stabilizers in rows ``n..2n-1``). Row signs are tracked symbolically: each
random measurement outcome becomes a fresh binary variable and every sign is
an affine function of those variables. A later outcome (or a parity of
outcomes) is deterministic exactly when its variable dependence cancels.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .circuit import Circuit, Kind, MEASUREMENTS, NON_CLIFFORD
from .pauli import PauliString


class NonDeterministicError(ValueError):
    """Raised when a check that must be deterministic is not."""


@dataclass
class MeasurementRecord:
    """Outcome of a symbolic reference run.

    Attributes:
        outcomes: Reference outcome bits (random outcomes resolved to 0).
        deterministic: Whether each individual outcome is fixed.
        dependence: ``dependence[m, v]`` is set when outcome ``m`` flips with
            random variable ``v``. Variable ``v`` is introduced by random
            measurement ``v``.
    """

    outcomes: np.ndarray
    deterministic: np.ndarray
    dependence: np.ndarray

    def parity(self, indices) -> tuple[int, bool]:
        """Return ``(reference value, is_deterministic)`` of an outcome parity."""
        idx = np.asarray(list(indices), dtype=int)
        if idx.size == 0:
            return 0, True
        value = int(np.bitwise_xor.reduce(self.outcomes[idx].astype(np.uint8)))
        dep = np.bitwise_xor.reduce(self.dependence[idx], axis=0)
        return value, not dep.any()


class Tableau:
    """CHP tableau with symbolic signs.

    Attributes:
        n: Number of qubits.
        x, z: ``(2n, n)`` boolean Pauli components of destabilizer and stabilizer rows.
        r: ``(2n,)`` constant sign bits.
        dep: ``(2n, n_vars)`` symbolic sign dependence.
    """

    def __init__(self, n: int, n_vars: int = 0):
        self.n = n
        self.x = np.zeros((2 * n, n), dtype=bool)
        self.z = np.zeros((2 * n, n), dtype=bool)
        idx = np.arange(n)
        self.x[idx, idx] = True
        self.z[n + idx, idx] = True
        self.r = np.zeros(2 * n, dtype=bool)
        self.dep = np.zeros((2 * n, n_vars), dtype=bool)

    # -- rows as Pauli strings ------------------------------------------------
    def _row_pauli(self, i: int) -> PauliString:
        xm = int(np.dot(self.x[i].astype(object), [1 << q for q in range(self.n)])) if self.n else 0
        zm = int(np.dot(self.z[i].astype(object), [1 << q for q in range(self.n)])) if self.n else 0
        return PauliString(self.n, xm, zm, 2 * int(self.r[i]))

    @property
    def stabilizers(self) -> list[PauliString]:
        return [self._row_pauli(self.n + i) for i in range(self.n)]

    @property
    def destabilizers(self) -> list[PauliString]:
        return [self._row_pauli(i) for i in range(self.n)]

    # -- Clifford gates -------------------------------------------------------
    def h(self, a: int) -> None:
        self.r ^= self.x[:, a] & self.z[:, a]
        self.x[:, a], self.z[:, a] = self.z[:, a].copy(), self.x[:, a].copy()

    def s(self, a: int) -> None:
        self.r ^= self.x[:, a] & self.z[:, a]
        self.z[:, a] ^= self.x[:, a]

    def cnot(self, c: int, t: int) -> None:
        self.r ^= self.x[:, c] & self.z[:, t] & ~(self.x[:, t] ^ self.z[:, c])
        self.x[:, t] ^= self.x[:, c]
        self.z[:, c] ^= self.z[:, t]

    def pauli_x(self, a: int, dep_row: np.ndarray | None = None, const: bool = True) -> None:
        """Apply ``X_a`` raised to ``const + dep_row`` (symbolic)."""
        hit = self.z[:, a]
        if const:
            self.r ^= hit
        if dep_row is not None:
            self.dep[hit] ^= dep_row

    # -- row arithmetic -------------------------------------------------------
    def _rowsum_into(self, rows: np.ndarray, src: int) -> None:
        """rows ← rows · src for a set of row indices."""
        if rows.size == 0:
            return
        x1, z1 = self.x[src].astype(np.int8), self.z[src].astype(np.int8)
        x2, z2 = self.x[rows].astype(np.int8), self.z[rows].astype(np.int8)
        g = np.where(
            (x1 == 1) & (z1 == 1), z2 - x2,
            np.where((x1 == 1) & (z1 == 0), z2 * (2 * x2 - 1),
                     np.where((x1 == 0) & (z1 == 1), x2 * (1 - 2 * z2), 0)),
        )
        total = 2 * self.r[rows].astype(np.int64) + 2 * int(self.r[src]) + g.sum(axis=1)
        self.r[rows] = (total % 4) == 2
        self.dep[rows] ^= self.dep[src]
        self.x[rows] ^= self.x[src]
        self.z[rows] ^= self.z[src]

    def measure_z(self, a: int, var: int | None) -> tuple[bool, np.ndarray | None, bool]:
        """Measure ``Z_a``.

        Args:
            a: Qubit.
            var: Symbolic variable assigned to the outcome if it is random;
                ``None`` fixes a random outcome to 0 (used for resets).

        Returns:
            ``(const, dependence, deterministic)``.
        """
        n = self.n
        stab_hits = np.nonzero(self.x[n:, a])[0]
        if stab_hits.size:
            p = n + stab_hits[0]
            others = np.nonzero(self.x[:, a])[0]
            others = others[others != p]
            self._rowsum_into(others, p)
            self.x[p - n], self.z[p - n] = self.x[p].copy(), self.z[p].copy()
            self.r[p - n] = self.r[p]
            self.dep[p - n] = self.dep[p]
            self.x[p] = False
            self.z[p] = False
            self.z[p, a] = True
            self.r[p] = False
            self.dep[p] = False
            if var is not None:
                self.dep[p, var] = True
                dep = np.zeros(self.dep.shape[1], dtype=bool)
                dep[var] = True
                return False, dep, False
            return False, None, False
        # Deterministic: accumulate stabilizers paired with destabilizers containing X_a.
        rows = np.nonzero(self.x[:n, a])[0] + n
        x = np.zeros(n, dtype=bool)
        z = np.zeros(n, dtype=bool)
        r = 0
        dep = np.zeros(self.dep.shape[1], dtype=bool)
        for i in rows:
            x1, z1 = self.x[i].astype(np.int8), self.z[i].astype(np.int8)
            x2, z2 = x.astype(np.int8), z.astype(np.int8)
            g = np.where(
                (x1 == 1) & (z1 == 1), z2 - x2,
                np.where((x1 == 1) & (z1 == 0), z2 * (2 * x2 - 1),
                         np.where((x1 == 0) & (z1 == 1), x2 * (1 - 2 * z2), 0)),
            )
            r = (2 * r + 2 * int(self.r[i]) + int(g.sum())) % 4 // 2
            dep ^= self.dep[i]
            x ^= self.x[i]
            z ^= self.z[i]
        return bool(r), dep, True

    def reset_z(self, a: int) -> None:
        const, dep, det = self.measure_z(a, None)
        if det:
            self.pauli_x(a, dep if dep is not None and dep.any() else None, const)


def tableau_simulate(circ: Circuit, clifford_approx: bool = True) -> MeasurementRecord:
    """Run a noiseless Clifford circuit symbolically.

    Args:
        circ: Circuit without noise channels.
        clifford_approx: Treat ``T``/``T_DAGGER`` as identity.

    Returns:
        Per-measurement reference outcomes, determinism flags and symbolic
        dependence on earlier random outcomes.

    Raises:
        ValueError: If the circuit contains noise, or non-Clifford gates
            without the approximation flag.
    """
    if circ.is_noisy():
        raise ValueError("tableau_simulate requires a noiseless circuit")
    n = circ.num_qubits
    n_meas = circ.num_measurements
    tab = Tableau(n, n_meas)
    outcomes = np.zeros(n_meas, dtype=bool)
    deterministic = np.zeros(n_meas, dtype=bool)
    dependence = np.zeros((n_meas, n_meas), dtype=bool)
    m = 0
    for ins in circ.instructions:
        k = ins.kind
        if k == Kind.TICK:
            continue
        if k in NON_CLIFFORD:
            if not clifford_approx:
                raise ValueError("non-Clifford gate without the Clifford approximation")
            continue
        q = ins.targets
        if k == Kind.H:
            tab.h(q[0])
        elif k == Kind.S:
            tab.s(q[0])
        elif k == Kind.CNOT:
            tab.cnot(q[0], q[1])
        elif k == Kind.RESET_Z:
            tab.reset_z(q[0])
        elif k == Kind.RESET_X:
            tab.reset_z(q[0])
            tab.h(q[0])
        elif k in MEASUREMENTS:
            if k == Kind.MEAS_X:
                tab.h(q[0])
            const, dep, det = tab.measure_z(q[0], m)
            outcomes[m] = const
            deterministic[m] = det and not (dep is not None and dep.any())
            if dep is not None:
                dependence[m] = dep
            if k == Kind.MEAS_X:
                tab.h(q[0])
            m += 1
        else:
            raise ValueError(f"unsupported instruction {k.value}")
    return MeasurementRecord(outcomes, deterministic, dependence)


def certify(circ: Circuit, clifford_approx: bool = True) -> MeasurementRecord:
    """Check that every detector and observable parity is deterministic.

    Raises:
        NonDeterministicError: naming the first offending annotation.
    """
    rec = tableau_simulate(circ.without_noise(), clifford_approx)
    for i, det in enumerate(circ.detectors):
        _, ok = rec.parity(det.measurements)
        if not ok:
            raise NonDeterministicError(f"detector {i} ({det.region} {det.label}) is random")
    for obs in circ.observables:
        _, ok = rec.parity(obs.measurements)
        if not ok:
            raise NonDeterministicError(f"observable {obs.label} is random")
    return rec


def determinize(rec: MeasurementRecord, indices, allowed=None) -> list[int]:
    """Complete an outcome parity with the random outcomes it depends on.

    A random outcome ``v`` contributes exactly variable ``v``, so XOR-ing in
    every flagged outcome cancels the dependence (e.g. Pauli-frame kickback
    from X-measured ancillas).

    Args:
        rec: Reference run of the circuit.
        indices: Measurement indices of the parity.
        allowed: Optional set of measurements that may be added.

    Returns:
        Sorted measurement indices of a deterministic parity.

    Raises:
        NonDeterministicError: If a needed outcome is not in ``allowed``.
    """
    sel = np.zeros(rec.outcomes.size, dtype=bool)
    for i in indices:
        sel[i] ^= True
    dep = np.bitwise_xor.reduce(rec.dependence[sel], axis=0) if sel.any() else np.zeros(sel.size, bool)
    extra = np.nonzero(dep)[0]
    if allowed is not None:
        bad = [int(v) for v in extra if v not in allowed]
        if bad:
            raise NonDeterministicError(f"parity depends on disallowed outcomes {bad}")
    sel[extra] ^= True
    out = np.nonzero(sel)[0].tolist()
    if not rec.parity(out)[1]:
        raise NonDeterministicError("parity could not be made deterministic")
    return out
