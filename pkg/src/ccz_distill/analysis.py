"""Power-law fits of logical error rates and the space-time overhead model.

The overhead model compares CCZ-producing protocols run with ``k`` parallel
copies, of which only successful outputs are kept:

* spacetime(k) = k * logical_qubits * (rounds + teleport rounds)
* success(k)   = 1 - (1 - q)^k, ``q`` the per-copy success probability.

Protocols that produce a CCZ *state* pay two extra rounds for the gate
teleportation that consumes it; applying T gates directly does not.
Baseline round counts and success probabilities of the T-state factories are
not fixed by the comparison itself; they live in :class:`BaselineAssumptions`
and are meant to be overridden from configuration.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import asdict, dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

Z95 = 1.959963984540054
TELEPORT_ROUNDS = 2
STEPS_PER_ROUND = 8


@dataclass(frozen=True)
class RatePoint:
    """One simulated physical error rate.

    Attributes:
        p: Physical error rate.
        p_L: Logical error rate conditioned on acceptance.
        pl_ci: 95% interval of ``p_L``.
        p_accept: Acceptance probability.
        accept_ci: 95% interval of ``p_accept``.
        fails: Logical failures behind ``p_L`` (``None`` if unknown).
    """

    p: float
    p_L: float
    pl_ci: tuple[float, float] = (math.nan, math.nan)
    p_accept: float = math.nan
    accept_ci: tuple[float, float] = (math.nan, math.nan)
    fails: int | None = None

    def __post_init__(self):
        if not 0 < self.p < 1:
            raise ValueError(f"p must lie in (0, 1), got {self.p}")

    @classmethod
    def from_row(cls, row: dict) -> "RatePoint":
        """Build from a tally CSV row (see :func:`ccz_distill.sampler.read_csv`)."""
        return cls(float(row["p"]), float(row["p_L"]), (float(row["pl_ci_lo"]), float(row["pl_ci_hi"])),
                   float(row["p_accept"]), (float(row["ci_lo"]), float(row["ci_hi"])), int(row["fails"]))

    def log_sigma(self) -> float | None:
        """Standard error of ``log p_L`` from the interval, if available."""
        lo, hi = self.pl_ci
        if not (lo > 0 and hi > lo):
            return None
        return (math.log(hi) - math.log(lo)) / (2 * Z95)


@dataclass
class PowerLawFit:
    """Result of ``p_L = A p^b``.

    Attributes:
        A: Prefactor.
        b: Exponent.
        b_err: Standard error of ``b`` (0 when fixed).
        log_A_err: Standard error of ``log A``.
        residuals: ``log p_L - log(A p^b)`` per used point.
        used: Physical error rates of the points used.
        fixed_exponent: Whether ``b`` was held fixed.
    """

    A: float
    b: float
    b_err: float
    log_A_err: float
    residuals: list[float]
    used: list[float]
    fixed_exponent: bool = False

    def predict(self, p) -> np.ndarray:
        return self.A * np.asarray(p, dtype=float) ** self.b

    def to_dict(self) -> dict:
        return asdict(self)


def fit_power_law(points: Sequence[RatePoint], fixed_exponent: float | None = None) -> PowerLawFit:
    """Weighted least squares of ``log p_L`` against ``log p``.

    Weights are ``1 / sigma^2`` with ``sigma`` the standard error of
    ``log p_L`` derived from each point's interval; points without a usable
    interval get unit weight (all points are then equally weighted).

    Args:
        points: Rate points; those with ``p_L == 0`` are dropped with a warning.
        fixed_exponent: If given, only ``A`` is fitted.

    Raises:
        ValueError: With fewer than three usable points (two with a fixed
            exponent is still refused, to keep the contract uniform).
    """
    usable = []
    for pt in points:
        if not pt.p_L > 0:
            warnings.warn(f"dropping point p={pt.p:g} with zero logical failures", stacklevel=2)
            continue
        usable.append(pt)
    if len(usable) < 3:
        raise ValueError(f"need at least 3 points with p_L > 0, got {len(usable)}")
    x = np.log([pt.p for pt in usable])
    y = np.log([pt.p_L for pt in usable])
    sig = [pt.log_sigma() for pt in usable]
    w = np.ones(len(usable)) if any(s is None for s in sig) else 1 / np.square(sig)
    if fixed_exponent is not None:
        b = float(fixed_exponent)
        logA = float(np.sum(w * (y - b * x)) / np.sum(w))
        b_err, logA_err = 0.0, float(1 / math.sqrt(np.sum(w)))
    else:
        X = np.column_stack([np.ones_like(x), x])
        sw = np.sqrt(w)
        coef, *_ = np.linalg.lstsq(X * sw[:, None], y * sw, rcond=None)
        logA, b = float(coef[0]), float(coef[1])
        cov = np.linalg.inv(X.T @ (X * w[:, None]))
        logA_err, b_err = float(math.sqrt(cov[0, 0])), float(math.sqrt(cov[1, 1]))
    res = (y - (logA + b * x)).tolist()
    return PowerLawFit(math.exp(logA), b, b_err, logA_err, res, [pt.p for pt in usable],
                       fixed_exponent is not None)


# -- overhead model -------------------------------------------------------------------

class ProtocolId(str, enum.Enum):
    ZERO_CCZ = "ZERO_CCZ"
    FOUR_T = "FOUR_T"
    SEVEN_T = "SEVEN_T"
    EIGHT_T = "EIGHT_T"


@dataclass(frozen=True)
class BaselineAssumptions:
    """Inputs of the baseline models that come from outside the comparison.

    Every default here is an assumption, not a measured or derived number.

    Attributes:
        t_factory_rounds: Rounds for one zero-level T factory to emit a state.
        t_factory_success: Per-attempt success of the zero-level T factory at p = 1e-3.
        t_pl_coeff: Zero-level T logical error ``p_L = c p^2``.
        eight_t_qubits: Logical-qubit footprint of the 8T-to-CCZ factory.
        eight_t_rounds: Rounds per 8T-to-CCZ distillation.
        eight_t_success: Per-attempt success of the 8T-to-CCZ factory.
        eight_t_pl_coeff: 8T-to-CCZ logical error ``p_L = c p^2``.
        zero_ccz_rounds: Rounds charged to the zero-level CCZ circuit; ``None``
            derives it from the circuit depth.
    """

    t_factory_rounds: int = 3
    t_factory_success: float = 0.7
    t_pl_coeff: float = 100.0
    eight_t_qubits: int = 16
    eight_t_rounds: int = 12
    eight_t_success: float = 0.98
    eight_t_pl_coeff: float = 28.0
    zero_ccz_rounds: int | None = None

    def __post_init__(self):
        for name in ("t_factory_success", "eight_t_success"):
            v = getattr(self, name)
            if not 0 < v <= 1:
                raise ValueError(f"{name} must lie in (0, 1]")
        for name in ("t_factory_rounds", "eight_t_qubits", "eight_t_rounds"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class ProtocolModel:
    """Resource and error model of one CCZ-producing protocol.

    Attributes:
        id: Protocol identifier.
        A: Logical error prefactor.
        b: Logical error exponent (1 or 2).
        logical_qubits: Logical qubits per copy.
        rounds: Syndrome-measurement rounds per copy (before teleportation).
        needs_teleport_rounds: Whether the output is a state that must be
            teleported into the computation.
        success: Per-copy success probability.
    """

    id: ProtocolId
    A: float
    b: int
    logical_qubits: int
    rounds: int
    needs_teleport_rounds: bool
    success: float

    def __post_init__(self):
        if not self.A > 0:
            raise ValueError("A must be positive")
        if self.b not in (1, 2):
            raise ValueError("b must be 1 or 2")
        if not 0 <= self.success <= 1:
            raise ValueError("success must lie in [0, 1]")

    @property
    def total_rounds(self) -> int:
        return self.rounds + (TELEPORT_ROUNDS if self.needs_teleport_rounds else 0)

    @property
    def spacetime_per_copy(self) -> int:
        return self.logical_qubits * self.total_rounds


def zero_ccz_rounds(depth: int) -> int:
    """Surface-code rounds spanned by a circuit of ``depth`` time steps."""
    return max(1, math.ceil(depth / STEPS_PER_ROUND))


def build_models(zero_success: float, zero_A: float = 300.0, zero_depth: int = 24,
                 assumptions: BaselineAssumptions | None = None) -> dict[ProtocolId, ProtocolModel]:
    """Models of the four protocols.

    ``FOUR_T`` and ``SEVEN_T`` use one T factory next to three data qubits and
    consume the T states sequentially; each T consumption costs one factory
    run plus a teleportation. ``FOUR_T`` yields a CCZ state (teleported
    afterwards); ``SEVEN_T`` applies the gate directly.

    Args:
        zero_success: Per-copy acceptance of the zero-level CCZ circuit.
        zero_A: Its ``p_L / p^2`` prefactor.
        zero_depth: Its circuit depth in time steps.
        assumptions: Baseline inputs.
    """
    a = assumptions or BaselineAssumptions()
    zr = a.zero_ccz_rounds if a.zero_ccz_rounds is not None else zero_ccz_rounds(zero_depth)
    per_t = a.t_factory_rounds + TELEPORT_ROUNDS
    q = a.t_factory_success
    return {
        ProtocolId.ZERO_CCZ: ProtocolModel(ProtocolId.ZERO_CCZ, zero_A, 2, 3, zr, True, zero_success),
        ProtocolId.FOUR_T: ProtocolModel(ProtocolId.FOUR_T, 4 * a.t_pl_coeff, 2, 4, 4 * per_t, True, q ** 4),
        ProtocolId.SEVEN_T: ProtocolModel(ProtocolId.SEVEN_T, 7 * a.t_pl_coeff, 2, 4, 7 * per_t, False, q ** 7),
        ProtocolId.EIGHT_T: ProtocolModel(ProtocolId.EIGHT_T, a.eight_t_pl_coeff, 2, a.eight_t_qubits,
                                          a.eight_t_rounds, True, a.eight_t_success),
    }


def baseline_pl(model: ProtocolId | str | ProtocolModel, p: float, zero_A: float = 300.0,
                assumptions: BaselineAssumptions | None = None) -> float:
    """Closed-form logical error rate of a protocol at physical rate ``p``.

    ``FOUR_T``/``SEVEN_T`` accumulate four/seven zero-level T states of
    ``100 p^2`` each; ``EIGHT_T`` is ``28 p^2``; ``ZERO_CCZ`` is ``zero_A p^2``.
    A :class:`ProtocolModel` is evaluated as ``A p^b``.
    """
    if not 0 <= p < 0.1:
        raise ValueError("p must lie in [0, 0.1)")
    if isinstance(model, ProtocolModel):
        return model.A * p ** model.b
    a = assumptions or BaselineAssumptions()
    coeff = {
        ProtocolId.ZERO_CCZ: zero_A,
        ProtocolId.FOUR_T: 4 * a.t_pl_coeff,
        ProtocolId.SEVEN_T: 7 * a.t_pl_coeff,
        ProtocolId.EIGHT_T: a.eight_t_pl_coeff,
    }[ProtocolId(model)]
    return coeff * p * p


@dataclass(frozen=True)
class OverheadPoint:
    k: int
    spacetime: int
    success: float


def overhead_curve(model: ProtocolModel, k: int | Iterable[int]) -> list[OverheadPoint]:
    """Space-time cost and success probability for parallelism ``k``.

    Raises:
        ValueError: If any ``k < 1``.
    """
    ks = [k] if isinstance(k, (int, np.integer)) else list(k)
    out = []
    for kk in ks:
        if kk < 1:
            raise ValueError("parallelism must be >= 1")
        out.append(OverheadPoint(int(kk), int(kk) * model.spacetime_per_copy,
                                 1.0 - (1.0 - model.success) ** int(kk)))
    return out


@dataclass
class DominanceResult:
    """Cost ratio of a baseline to the zero-level CCZ protocol at matched success.

    Attributes:
        baseline: Baseline protocol.
        ratios: Per baseline parallelism ``k``: baseline spacetime divided by
            the cheapest zero-level spacetime reaching at least that success.
        min_ratio: Smallest ratio over ``k``.
        holds: ``min_ratio >= factor``.
        factor: Required cost factor.
    """

    baseline: ProtocolId
    ratios: dict[int, float] = field(default_factory=dict)
    min_ratio: float = math.inf
    holds: bool = False
    factor: float = 5.0


def dominance(zero: ProtocolModel, baseline: ProtocolModel, k_max: int = 32,
              factor: float = 5.0, k_zero_max: int = 4096) -> DominanceResult:
    """Check that ``zero`` matches every success level of ``baseline`` at
    ``<= 1/factor`` of its space-time cost, for baseline ``k <= k_max``."""
    res = DominanceResult(baseline.id, factor=factor)
    for pt in overhead_curve(baseline, range(1, k_max + 1)):
        kz = _min_parallelism(zero.success, baseline.success, pt.k, k_zero_max)
        # An unreachable success level counts as a zero ratio (the claim fails).
        res.ratios[pt.k] = 0.0 if kz is None else pt.spacetime / (kz * zero.spacetime_per_copy)
    res.min_ratio = min(res.ratios.values())
    res.holds = res.min_ratio >= factor
    return res


def _min_parallelism(q: float, q_base: float, k_base: int, k_max: int) -> int | None:
    """Smallest ``k`` with ``(1-q)^k <= (1-q_base)^k_base``, compared in log space."""
    if q >= 1 or q_base <= 0:
        return 1
    if q <= 0 or q_base >= 1:
        return None
    need = k_base * math.log1p(-q_base)
    per = math.log1p(-q)
    k = max(1, math.ceil(need / per * (1 - 1e-12)))
    while k * per > need * (1 - 1e-12):
        k += 1
    return k if k <= k_max else None


def overhead_table(models: dict[ProtocolId, ProtocolModel], ks: Iterable[int]) -> list[dict]:
    """Rows ``(protocol, k, spacetime, success)`` for CSV export."""
    rows = []
    ks = list(ks)
    for pid, m in models.items():
        for pt in overhead_curve(m, ks):
            rows.append({"protocol": pid.value, "k": pt.k, "spacetime": pt.spacetime,
                         "success": f"{pt.success:.10g}"})
    return rows


def with_measured(models: dict[ProtocolId, ProtocolModel], success: float | None = None,
                  A: float | None = None) -> dict[ProtocolId, ProtocolModel]:
    """Copy of ``models`` with the zero-level CCZ success or prefactor replaced."""
    z = models[ProtocolId.ZERO_CCZ]
    z = replace(z, success=z.success if success is None else success, A=z.A if A is None else A)
    return {**models, ProtocolId.ZERO_CCZ: z}


# -- plots ----------------------------------------------------------------------------

def plot_rates_svg(points: Sequence[RatePoint], path, fit: PowerLawFit | None = None) -> None:
    """Logical error rate and acceptance against ``p`` as a static SVG."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    ps = np.array([pt.p for pt in points])
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.6))
    pl = np.array([pt.p_L for pt in points])
    lo = np.array([pt.pl_ci[0] for pt in points])
    hi = np.array([pt.pl_ci[1] for pt in points])
    ax1.errorbar(ps, pl, yerr=[pl - lo, hi - pl], fmt="o", capsize=3, label="simulated")
    if fit is not None:
        grid = np.geomspace(ps.min(), ps.max(), 50)
        ax1.plot(grid, fit.predict(grid), "--", label=f"{fit.A:.3g} p^{fit.b:.2f}")
    ax1.set(xscale="log", yscale="log", xlabel="physical error rate p", ylabel="logical error rate")
    ax1.legend()
    acc = np.array([pt.p_accept for pt in points])
    alo = np.array([pt.accept_ci[0] for pt in points])
    ahi = np.array([pt.accept_ci[1] for pt in points])
    ax2.errorbar(ps, acc, yerr=[acc - alo, ahi - acc], fmt="o", capsize=3)
    ax2.set(xscale="log", xlabel="physical error rate p", ylabel="success probability", ylim=(0, 1))
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def plot_overhead_svg(models: dict[ProtocolId, ProtocolModel], ks: Iterable[int], path) -> None:
    """Success probability against space-time overhead as a static SVG."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    ks = list(ks)
    fig, ax = plt.subplots(figsize=(5, 3.6))
    for pid, m in models.items():
        pts = overhead_curve(m, ks)
        ax.plot([pt.spacetime for pt in pts], [pt.success for pt in pts], "o-", ms=3, label=pid.value)
    ax.set(xscale="log", xlabel="space-time overhead (logical qubits x rounds)",
           ylabel="success probability", ylim=(0, 1.02))
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
