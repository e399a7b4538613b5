"""Decoders for the residual (non-postselected) output-patch detectors."""

from __future__ import annotations

from typing import Protocol

import numpy as np


class Decoder(Protocol):
    """Maps residual syndromes to observable corrections."""

    def decode(self, syndromes: np.ndarray) -> np.ndarray:
        """Boolean ``(shots, n_out)`` syndromes -> boolean ``(shots, n_obs)`` corrections."""
        ...


class LookupDecoder:
    """Exhaustive minimum-weight lookup over fault sets of weight <= ``max_weight``.

    The table is built from elementary faults that leave the postselected
    detectors silent. For every syndrome reachable with at most
    ``max_weight`` such faults, the correction of the lowest-weight sets is
    chosen; ties are broken by total probability. Unknown syndromes get no
    correction.

    Args:
        out_syndromes: Boolean ``(n_faults, n_out)`` output-detector flips.
        obs_flips: Boolean ``(n_faults, n_obs)`` observable flips.
        probs: Probability of each fault.
        max_weight: 1 or 2.
    """

    def __init__(self, out_syndromes: np.ndarray, obs_flips: np.ndarray, probs: np.ndarray,
                 max_weight: int = 2):
        if max_weight not in (1, 2):
            raise ValueError("max_weight must be 1 or 2")
        out = np.asarray(out_syndromes, dtype=bool)
        obs = np.asarray(obs_flips, dtype=bool)
        self.n_out = out.shape[1]
        self.n_obs = obs.shape[1]
        # Merge faults with identical effect.
        groups: dict[tuple[bytes, int], float] = {}
        for s, o, pr in zip(np.packbits(out, axis=1), _obs_int(obs), probs):
            key = (s.tobytes(), int(o))
            groups[key] = groups.get(key, 0.0) + float(pr)
        keys = list(groups)
        # syndrome -> weight -> obs -> probability
        table: dict[bytes, dict[int, dict[int, float]]] = {}

        def add(s: bytes, w: int, o: int, pr: float) -> None:
            table.setdefault(s, {}).setdefault(w, {})
            table[s][w][o] = table[s][w].get(o, 0.0) + pr

        zero = bytes(len(keys[0][0])) if keys else b""
        add(zero, 0, 0, 1.0)
        arr = np.array([np.frombuffer(k[0], dtype=np.uint8) for k in keys]) if keys else None
        for (s, o), pr in zip(keys, groups.values()):
            add(s, 1, o, pr)
        if max_weight == 2 and keys:
            obs_arr = np.array([k[1] for k in keys])
            pr_arr = np.array(list(groups.values()))
            for i in range(len(keys)):
                xs = arr[i + 1:] ^ arr[i]
                os = obs_arr[i + 1:] ^ obs_arr[i]
                ps = pr_arr[i + 1:] * pr_arr[i]
                for s, o, pr in zip(xs, os, ps):
                    add(s.tobytes(), 2, int(o), float(pr))
        self.table: dict[bytes, int] = {}
        for s, by_w in table.items():
            w = min(by_w)
            cand = by_w[w]
            self.table[s] = max(sorted(cand), key=lambda o: cand[o])
        self._zero = zero

    def decode_one(self, syndrome: np.ndarray) -> int:
        key = np.packbits(np.asarray(syndrome, dtype=bool)).tobytes()
        return self.table.get(key, 0)

    def decode(self, syndromes: np.ndarray) -> np.ndarray:
        syn = np.asarray(syndromes, dtype=bool)
        packed = np.packbits(syn, axis=1)
        corr = np.array([self.table.get(r.tobytes(), 0) for r in packed], dtype=np.int64)
        return (corr[:, None] >> np.arange(self.n_obs)) & 1 == 1


def _obs_int(obs: np.ndarray) -> np.ndarray:
    obs = np.asarray(obs, dtype=bool)
    return (obs.astype(np.int64) << np.arange(obs.shape[1])).sum(axis=1)


class NullDecoder:
    """Applies no correction (raw residual observables)."""

    def __init__(self, n_obs: int):
        self.n_obs = n_obs

    def decode(self, syndromes: np.ndarray) -> np.ndarray:
        return np.zeros((len(syndromes), self.n_obs), dtype=bool)
