"""Monte Carlo sampling, fault enumeration and rate estimates.

Sampling works on the detector error model of a noisy circuit: every
elementary fault (one Pauli component of one channel) is propagated once to
its detector/observable flips, and shots are XOR sums of sampled faults.
Under the Clifford approximation this is exact. Channels fire independently;
the component of a firing channel is uniform over its Pauli support.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import statistics
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .circuit import Circuit
from .decoder import Decoder, LookupDecoder
from .frames import channel_components, fault_effects, mechanisms
from .tableau import certify

OUTPUT_REGIONS = frozenset({"OUTPUT_PATCH"})
BLOCK_SHOTS = 1 << 16


# -- error model ---------------------------------------------------------------------

@dataclass
class ErrorModel:
    """Detector error model of a noisy circuit.

    Attributes:
        post: Boolean ``(n_mech, n_post)`` flips of postselected detectors.
        out: Boolean ``(n_mech, n_out)`` flips of decoded detectors.
        obs: Boolean ``(n_mech, n_obs)`` observable flips.
        channel: Channel index of each mechanism.
        channel_p: Firing probability of each channel.
        channel_start: First mechanism index of each channel.
        channel_size: Number of components of each channel.
        observable_labels: Observable names.
    """

    post: np.ndarray
    out: np.ndarray
    obs: np.ndarray
    channel: np.ndarray
    channel_p: np.ndarray
    channel_start: np.ndarray
    channel_size: np.ndarray
    observable_labels: list[str]

    @property
    def n_mech(self) -> int:
        return len(self.channel)

    @property
    def probability(self) -> np.ndarray:
        """Probability of each mechanism."""
        return self.channel_p[self.channel] / self.channel_size[self.channel]

    @classmethod
    def from_circuit(cls, circ: Circuit, clifford_approx: bool = True,
                     check: bool = True) -> "ErrorModel":
        """Build the model; by default certify the reference run first.

        Raises:
            NonDeterministicError: If a detector or observable is random.
        """
        if check:
            certify(circ, clifford_approx)
        mechs = mechanisms(circ)
        det, obs, _ = fault_effects(circ, mechs, clifford_approx)
        regions = np.array([d.region for d in circ.detectors], dtype=object)
        is_out = np.array([r in OUTPUT_REGIONS for r in regions], dtype=bool)
        chan_ids = sorted({m.channel for m in mechs})
        chan_index = {c: i for i, c in enumerate(chan_ids)}
        channel = np.array([chan_index[m.channel] for m in mechs], dtype=np.int64)
        sizes = np.array([len(channel_components(circ.instructions[c])) for c in chan_ids], dtype=np.int64)
        starts = np.concatenate([[0], np.cumsum(sizes)[:-1]]).astype(np.int64)
        ps = np.array([circ.instructions[c].p for c in chan_ids], dtype=float)
        return cls(det[:, ~is_out], det[:, is_out], obs, channel, ps, starts, sizes,
                   [o.label for o in circ.observables])

    def decoder(self, max_weight: int = 2) -> LookupDecoder:
        """Lookup decoder from faults that keep the postselected detectors silent."""
        silent = ~self.post.any(axis=1)
        return LookupDecoder(self.out[silent], self.obs[silent], self.probability[silent], max_weight)


# -- tallies and estimates ------------------------------------------------------------

@dataclass
class Tally:
    """Raw counts of a sampling run.

    Attributes:
        shots: Shots simulated.
        accepted: Shots with every postselected detector silent.
        logical_fail: Accepted shots with any corrected observable flipped.
        per_observable_fail: Accepted failures per observable.
        seed: Seed of the run.
    """

    shots: int
    accepted: int
    logical_fail: int
    per_observable_fail: list[int]
    seed: int

    def __post_init__(self):
        if not 0 <= self.logical_fail <= self.accepted <= self.shots:
            raise ValueError("tally counts out of order")
        if any(f > self.accepted or f < 0 for f in self.per_observable_fail):
            raise ValueError("per-observable failures exceed accepted shots")

    def __add__(self, other: "Tally") -> "Tally":
        return Tally(self.shots + other.shots, self.accepted + other.accepted,
                     self.logical_fail + other.logical_fail,
                     [a + b for a, b in zip(self.per_observable_fail, other.per_observable_fail)],
                     self.seed)

    def to_dict(self) -> dict:
        return asdict(self)


def wilson_interval(k: int, n: int, confidence: float = 0.95) -> tuple[float, float]:
    """Two-sided Wilson score interval for ``k`` successes in ``n`` trials."""
    if n <= 0:
        raise ValueError("need at least one trial")
    if not 0 <= k <= n:
        raise ValueError("k must lie in [0, n]")
    z = statistics.NormalDist().inv_cdf(0.5 + confidence / 2)
    ph = k / n
    den = 1 + z * z / n
    centre = (ph + z * z / (2 * n)) / den
    half = z * math.sqrt(ph * (1 - ph) / n + z * z / (4 * n * n)) / den
    return max(0.0, centre - half), min(1.0, centre + half)


@dataclass
class Estimate:
    """Rates with 95% Wilson score intervals.

    ``p_L`` is conditioned on acceptance and is ``nan`` (with ``defined``
    false) when no shot was accepted.
    """

    p_accept: float
    accept_ci: tuple[float, float]
    p_L: float
    pl_ci: tuple[float, float]
    defined: bool = True
    method: str = "wilson"


def estimate_rates(t: Tally) -> Estimate:
    """Acceptance and conditional logical error rate of a tally.

    Raises:
        ValueError: If the tally has no shots.
    """
    if t.shots <= 0:
        raise ValueError("tally has no shots")
    pa = t.accepted / t.shots
    aci = wilson_interval(t.accepted, t.shots)
    if t.accepted == 0:
        return Estimate(pa, aci, float("nan"), (float("nan"), float("nan")), defined=False)
    return Estimate(pa, aci, t.logical_fail / t.accepted, wilson_interval(t.logical_fail, t.accepted))


# -- sampling -------------------------------------------------------------------------

def block_rng(seed: int, block: int) -> np.random.Generator:
    """Counter-based stream for one shot block, keyed by ``(seed, block)``."""
    if seed < 0 or block < 0:
        raise ValueError("seed and block must be non-negative")
    counter = np.array([0, 0, block, 0], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=seed, counter=counter))


def _bernoulli_positions(rng: np.random.Generator, p: float, n: int) -> np.ndarray:
    """Indices of successes in ``n`` independent Bernoulli(p) trials."""
    if p <= 0 or n == 0:
        return np.zeros(0, dtype=np.int64)
    if p >= 1:
        return np.arange(n, dtype=np.int64)
    out = []
    pos = -1
    while True:
        k = int(n * p + 6 * math.sqrt(n * p) + 16)
        steps = rng.geometric(p, size=k).astype(np.int64)
        idx = pos + np.cumsum(steps)
        out.append(idx[idx < n])
        if idx[-1] >= n:
            break
        pos = int(idx[-1])
    return np.concatenate(out)


class Sampler:
    """Shot sampler for one noisy circuit.

    Args:
        circ: Noisy circuit with detectors and observables.
        decoder: Residual decoder; default :class:`LookupDecoder` (weight 2).
        clifford_approx: Treat non-Clifford gates as identity.
    """

    def __init__(self, circ: Circuit, decoder: Decoder | None = None, clifford_approx: bool = True):
        self.model = ErrorModel.from_circuit(circ, clifford_approx)
        self.decoder = decoder if decoder is not None else self.model.decoder()
        m = self.model
        self._post = np.packbits(m.post, axis=1, bitorder="little")
        self._out = np.packbits(m.out, axis=1, bitorder="little")
        self._obs = (m.obs.astype(np.int64) << np.arange(m.obs.shape[1])).sum(axis=1)
        self._groups = {}
        for p in np.unique(m.channel_p):
            if p > 0:
                self._groups[float(p)] = np.nonzero(m.channel_p == p)[0]

    def sample_block(self, seed: int, block: int, shots: int) -> Tally:
        """Simulate ``shots`` (at most one block) from stream ``(seed, block)``."""
        m = self.model
        n_obs = m.obs.shape[1]
        rng = block_rng(seed, block)
        hits_shot, hits_mech = [], []
        for p, chans in self._groups.items():
            pos = _bernoulli_positions(rng, p, len(chans) * shots)
            ch = chans[pos // shots]
            comp = (rng.random(pos.size) * m.channel_size[ch]).astype(np.int64)
            hits_shot.append(pos % shots)
            hits_mech.append(m.channel_start[ch] + comp)
        shot = np.concatenate(hits_shot) if hits_shot else np.zeros(0, np.int64)
        mech = np.concatenate(hits_mech) if hits_mech else np.zeros(0, np.int64)
        if shot.size == 0:
            return Tally(shots, shots, 0, [0] * n_obs, seed)
        order = np.argsort(shot, kind="stable")
        shot, mech = shot[order], mech[order]
        starts = np.concatenate([[0], np.nonzero(np.diff(shot))[0] + 1])
        post = np.bitwise_xor.reduceat(self._post[mech], starts, axis=0)
        out = np.bitwise_xor.reduceat(self._out[mech], starts, axis=0)
        obs = np.bitwise_xor.reduceat(self._obs[mech], starts)
        acc = ~post.any(axis=1)
        rejected = int((~acc).sum())
        out, obs = out[acc], obs[acc]
        need = out.any(axis=1)
        if need.any():
            syn = np.unpackbits(out[need], axis=1, bitorder="little")[:, :m.out.shape[1]].astype(bool)
            corr = self.decoder.decode(syn)
            obs[need] ^= (corr.astype(np.int64) << np.arange(n_obs)).sum(axis=1)
        flips = (obs[:, None] >> np.arange(n_obs)) & 1
        per_obs = flips.sum(axis=0).astype(int).tolist()
        return Tally(shots, shots - rejected, int((obs != 0).sum()), per_obs, seed)

    def sample(self, shots: int, seed: int, threads: int = 1, first_block: int = 0,
               block_shots: int = BLOCK_SHOTS) -> Tally:
        """Simulate ``shots`` shots split into fixed-size counter-keyed blocks.

        The result depends only on ``(shots, seed, first_block, block_shots)``,
        never on ``threads``.
        """
        if shots < 0:
            raise ValueError("shots must be non-negative")
        n_blocks = -(-shots // block_shots)
        sizes = [min(block_shots, shots - i * block_shots) for i in range(n_blocks)]
        jobs = [(seed, first_block + i, s) for i, s in enumerate(sizes)]
        n_obs = self.model.obs.shape[1]
        total = Tally(0, 0, 0, [0] * n_obs, seed)
        if threads <= 1 or len(jobs) <= 1:
            parts = [self.sample_block(*j) for j in jobs]
        else:
            with ThreadPoolExecutor(max_workers=threads) as ex:
                parts = list(ex.map(lambda j: self.sample_block(*j), jobs))
        for t in parts:
            total = total + t
        return total


def sample(circ: Circuit, shots: int, seed: int, threads: int = 1,
           decoder: Decoder | None = None) -> Tally:
    """Convenience wrapper around :class:`Sampler`."""
    return Sampler(circ, decoder).sample(shots, seed, threads)


# -- fault enumeration ------------------------------------------------------------------

@dataclass
class FaultReport:
    """Outcome counts of exhaustive fault insertion.

    Attributes:
        order: Number of simultaneous faults.
        configurations: Fault configurations inserted.
        discarded: Configurations firing a postselected detector.
        accepted_clean: Accepted configurations with correct (decoded) output.
        accepted_fail: Accepted configurations with a logical failure.
        malignant_weight: Total probability of the failing configurations.
        leading_coefficient: ``malignant_weight / p**order`` (order 2: the
            unconditioned ``A`` in ``p_L ~ A p^2``), ``nan`` when ``p == 0``.
        p: Physical error rate of the noisy circuit (if uniform).
        malignant: Up to 50 example failing configurations (mechanism indices).
    """

    order: int
    configurations: int
    discarded: int
    accepted_clean: int
    accepted_fail: int
    malignant_weight: float
    leading_coefficient: float
    p: float
    malignant: list[list[int]] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def enumerate_faults(circ: Circuit, order: int, decoder: Decoder | None = None,
                     model: ErrorModel | None = None) -> FaultReport:
    """Insert every single fault (order 1) or every pair from distinct
    channels (order 2) and classify the outcomes.

    Raises:
        ValueError: If ``order`` is not 1 or 2.
    """
    if order not in (1, 2):
        raise ValueError(f"order must be 1 or 2, got {order}")
    m = model or ErrorModel.from_circuit(circ)
    dec = decoder or m.decoder()
    prob = m.probability
    ps = np.unique(m.channel_p)
    p = float(ps[0]) if len(ps) == 1 else float("nan")
    post = np.packbits(m.post, axis=1)
    out = np.packbits(m.out, axis=1)
    obs = (m.obs.astype(np.int64) << np.arange(m.obs.shape[1])).sum(axis=1)
    n_out = m.out.shape[1]

    # Decoded failure per distinct output syndrome, memoised.
    memo: dict[bytes, int] = {}

    def correction(rows: np.ndarray) -> np.ndarray:
        res = np.empty(len(rows), dtype=np.int64)
        for i, r in enumerate(rows):
            k = r.tobytes()
            if k not in memo:
                bits = np.unpackbits(r)[:n_out].astype(bool)
                corr = dec.decode(bits[None, :])[0]
                memo[k] = int((corr.astype(np.int64) << np.arange(len(corr))).sum())
            res[i] = memo[k]
        return res

    if order == 1:
        acc = ~post.any(axis=1)
        fail = acc & ((obs ^ correction(out)) != 0)
        idx = np.nonzero(fail)[0]
        w = float(prob[fail].sum())
        return FaultReport(1, m.n_mech, int((~acc).sum()), int((acc & ~fail).sum()), int(fail.sum()), w,
                           w / p if p > 0 else float("nan"), p, [[int(i)] for i in idx[:50]])

    # Order 2: group mechanisms with identical effect, pair the groups, then
    # remove pairs of components of the same channel (mutually exclusive).
    eff = np.concatenate([post, out, obs[:, None].astype(np.uint8)], axis=1)
    uniq, inv = np.unique(eff, axis=0, return_inverse=True)
    inv = inv.ravel()
    g_count = np.bincount(inv, minlength=len(uniq)).astype(np.int64)
    g_prob = np.bincount(inv, weights=prob, minlength=len(uniq))
    n_post, n_outb = post.shape[1], out.shape[1]

    def classify(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        acc = ~x[:, :n_post].any(axis=1)
        o = x[:, n_post + n_outb].astype(np.int64)
        fail = np.zeros(len(x), dtype=bool)
        if acc.any():
            fail[acc] = (o[acc] ^ correction(x[acc, n_post:n_post + n_outb])) != 0
        return acc, fail

    configs = discarded = clean = failed = 0
    weight = 0.0
    examples: list[list[int]] = []
    for i in range(len(uniq)):
        x = uniq[i:] ^ uniq[i]
        cnt = g_count[i] * g_count[i:]
        cnt[0] = g_count[i] * (g_count[i] - 1) // 2
        wt = g_prob[i] * g_prob[i:]
        wt[0] = (g_prob[i] ** 2 - float((prob[inv == i] ** 2).sum())) / 2
        acc, fail = classify(x)
        configs += int(cnt.sum())
        discarded += int(cnt[~acc].sum())
        clean += int(cnt[acc & ~fail].sum())
        failed += int(cnt[fail].sum())
        weight += float(wt[fail].sum())
        if fail.any() and len(examples) < 50:
            for j in np.nonzero(fail)[0][:50 - len(examples)]:
                a = int(np.nonzero(inv == i)[0][0])
                bs = np.nonzero(inv == i + j)[0]
                bs = bs[bs != a]
                if bs.size:
                    examples.append([a, int(bs[0])])
    # Same-channel component pairs were counted above but cannot co-occur.
    for c in range(len(m.channel_start)):
        lo, n = int(m.channel_start[c]), int(m.channel_size[c])
        if n < 2:
            continue
        ids = np.arange(lo, lo + n)
        a, b = np.triu_indices(n, 1)
        x = eff[ids[a]] ^ eff[ids[b]]
        acc, fail = classify(x)
        configs -= len(a)
        discarded -= int((~acc).sum())
        clean -= int((acc & ~fail).sum())
        failed -= int(fail.sum())
        weight -= float((prob[ids[a]] * prob[ids[b]])[fail].sum())
    coef = weight / p ** 2 if p > 0 else float("nan")
    return FaultReport(2, configs, discarded, clean, failed, weight, coef, p, examples)


# -- serialization ----------------------------------------------------------------------

CSV_COLUMNS = ["p", "shots", "accepted", "p_accept", "ci_lo", "ci_hi", "fails", "p_L",
               "pl_ci_lo", "pl_ci_hi", "config_hash"]


def config_hash(config: dict) -> str:
    """Stable short hash of a JSON-serialisable configuration."""
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def csv_row(p: float, t: Tally, chash: str) -> dict:
    e = estimate_rates(t)
    return {
        "p": repr(float(p)), "shots": t.shots, "accepted": t.accepted,
        "p_accept": f"{e.p_accept:.10g}", "ci_lo": f"{e.accept_ci[0]:.10g}", "ci_hi": f"{e.accept_ci[1]:.10g}",
        "fails": t.logical_fail, "p_L": f"{e.p_L:.10g}",
        "pl_ci_lo": f"{e.pl_ci[0]:.10g}", "pl_ci_hi": f"{e.pl_ci[1]:.10g}", "config_hash": chash,
    }


def write_csv(path, rows: list[dict]) -> None:
    with open(path, "w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=CSV_COLUMNS, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow(r)


def read_csv(path) -> list[dict]:
    """Read a tally CSV; numeric columns are converted."""
    with open(path, newline="") as f:
        rows = list(csv.DictReader(f))
    ints = {"shots", "accepted", "fails"}
    out = []
    for r in rows:
        out.append({k: (v if k == "config_hash" else int(v) if k in ints else float(v)) for k, v in r.items()})
    return out
