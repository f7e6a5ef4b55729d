"""Decoding a posteriorgram against one candidate path.

Three decoders share the same segmentation objective: pick occupancies
u_1..u_N (frames per state, summing to the frame count T) maximizing the sum
of per-state duration log probabilities and per-frame observation log
probabilities. They differ in the duration term:

* ``hsmm_viterbi``   explicit per-state occupancy pmf, segmental DP.
* ``hmm_viterbi``    standard left-to-right Viterbi whose self-transitions
                     impose an implicit 1-shifted geometric occupancy.
* ``post_processor_rescore``  adds a weighted Gaussian duration log density
                     to an already-decoded standard-Viterbi score.

``brute_force_decode`` enumerates every segmentation and is kept deliberately
independent of the DP code paths so it can serve as a verification oracle.

All scores are natural-log; zero probabilities are represented as -inf and the
DP only ever adds and maximizes -inf values (never subtracts two -inf), so no
NaNs can appear. When two segmentations tie, the lexicographically smallest
occupancy vector wins (earlier states take fewer frames).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from .durations import gaussian_log_density
from .network import DecodablePath


@dataclass(frozen=True, eq=False)
class ObservationMatrix:
    """T x P matrix of natural-log per-frame phoneme posteriors.

    Rows of a true posteriorgram exponentiate and sum to 1; use
    ``from_posteriors`` to enforce that at ingestion. The plain constructor
    only checks shape and finiteness so that score arithmetic (for example
    adding a constant to every entry) stays representable.
    """

    log_probs: np.ndarray
    hop_s: float

    def __post_init__(self) -> None:
        arr = np.asarray(self.log_probs, dtype=np.float64).copy()
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"log_probs must be a T x P matrix with T,P >= 1, got {arr.shape}")
        if np.isnan(arr).any() or np.isposinf(arr).any():
            raise ValueError("log_probs entries must be finite or -inf")
        if not self.hop_s > 0:
            raise ValueError(f"hop_s must be > 0, got {self.hop_s}")
        arr.flags.writeable = False
        object.__setattr__(self, "log_probs", arr)

    @property
    def n_frames(self) -> int:
        return self.log_probs.shape[0]

    @property
    def n_classes(self) -> int:
        return self.log_probs.shape[1]

    @property
    def duration_s(self) -> float:
        return self.n_frames * self.hop_s

    def shifted(self, c: float) -> "ObservationMatrix":
        """A copy with ``c`` added to every entry."""
        return ObservationMatrix(self.log_probs + c, self.hop_s)

    def row_normalization_error(self) -> float:
        """Max over frames of |sum(exp(row)) - 1|."""
        return float(np.abs(np.exp(self.log_probs).sum(axis=1) - 1.0).max())

    @classmethod
    def from_posteriors(
        cls, posteriors: np.ndarray, hop_s: float, tol: float = 1e-6
    ) -> "ObservationMatrix":
        post = np.asarray(posteriors, dtype=np.float64)
        if np.any(post < 0):
            raise ValueError("posterior entries must be >= 0")
        err = np.abs(post.sum(axis=1) - 1.0).max()
        if err > tol:
            raise ValueError(f"posterior rows must sum to 1 within {tol}, worst error {err}")
        with np.errstate(divide="ignore"):
            return cls(np.log(post), hop_s)

    def to_file(self, path: str | Path) -> None:
        """Write ``T P hop_s`` header then one row per frame at 17 significant digits."""
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"{self.n_frames} {self.n_classes} {repr(float(self.hop_s))}\n")
            np.savetxt(fh, self.log_probs, fmt="%.17g")

    @classmethod
    def from_file(cls, path: str | Path) -> "ObservationMatrix":
        with open(path, encoding="utf-8") as fh:
            header = fh.readline().split()
            if len(header) != 3:
                raise ValueError(f"{path}: expected header 'T P hop_s', got {header}")
            t, p, hop = int(header[0]), int(header[1]), float(header[2])
            arr = np.loadtxt(fh, dtype=np.float64, ndmin=2)
        if arr.shape != (t, p):
            raise ValueError(f"{path}: header promises {(t, p)}, file has {arr.shape}")
        return cls(arr, hop)


@dataclass(frozen=True)
class DecodeOutcome:
    """Best segmentation of one query against one path.

    ``occupancies[j]`` is the frame count of state j; the counts sum to the
    query frame count. ``log_posterior`` is -inf when every segmentation has
    zero probability.
    """

    phrase_id: str
    occupancies: tuple[int, ...]
    log_posterior: float

    def __post_init__(self) -> None:
        if any(u < 1 for u in self.occupancies):
            raise ValueError(f"occupancies must be >= 1, got {self.occupancies}")
        if math.isnan(self.log_posterior):
            raise ValueError("log_posterior is NaN")

    @property
    def finite(self) -> bool:
        return math.isfinite(self.log_posterior)

    @property
    def n_frames(self) -> int:
        return sum(self.occupancies)


def _check_pair(obs: ObservationMatrix, path: DecodablePath) -> None:
    if obs.n_classes != path.n_classes:
        raise ValueError(
            f"query has {obs.n_classes} phoneme classes, path {path.phrase_id!r} "
            f"expects {path.n_classes}"
        )
    if abs(obs.hop_s - path.hop_s) > 1e-12:
        raise ValueError(
            f"query hop {obs.hop_s} differs from path hop {path.hop_s} "
            f"for {path.phrase_id!r}"
        )
    if path.n_states > obs.n_frames:
        raise ValueError(
            f"path {path.phrase_id!r} has {path.n_states} states but the query "
            f"has only {obs.n_frames} frames"
        )


def hsmm_viterbi(obs: ObservationMatrix, path: DecodablePath) -> DecodeOutcome:
    """Segmental Viterbi with explicit occupancy distributions.

    Left-to-right chain, zero self-transitions, forward transitions of
    probability 1: the decode reduces to choosing one occupancy per state.
    Complexity O(T * sum_j M_j).
    """
    _check_pair(obs, path)
    T = obs.n_frames
    N = path.n_states
    caps = [min(dist.M, T) for _, dist in path.states]
    if sum(caps) < T:
        raise ValueError(
            f"path {path.phrase_id!r}: occupancy upper bounds sum to {sum(caps)} "
            f"< {T} frames, no feasible segmentation"
        )
    cols = [np.ascontiguousarray(obs.log_probs[:, idx]) for idx, _ in path.states]
    logds = [dist.log_pmf for _, dist in path.states]

    # suffix[j][t] = best score of states j..N-1 covering frames t..T-1
    suffix = np.full((N + 1, T + 1), -np.inf)
    suffix[N, T] = 0.0
    csums: list[np.ndarray | None] = [None] * N
    for j in range(N - 1, -1, -1):
        col, logd, nxt, cur = cols[j], logds[j], suffix[j + 1], suffix[j]
        if np.isfinite(col).all():
            # fast path: segment sums as cumsum differences (safe, col finite)
            csum = np.empty(T + 1)
            csum[0] = 0.0
            np.cumsum(col, out=csum[1:])
            csums[j] = csum
            merged = csum + nxt
            for u in range(1, caps[j] + 1):
                cand = (logd[u - 1] + merged[u:]) - csum[: T - u + 1]
                np.maximum(cur[: T - u + 1], cand, out=cur[: T - u + 1])
        else:
            # -inf entries present: build running segment sums, additions only
            seg = np.empty(0)
            for u in range(1, caps[j] + 1):
                seg = col.copy() if u == 1 else seg[:-1] + col[u - 1 :]
                cand = (logd[u - 1] + seg) + nxt[u:]
                np.maximum(cur[: T - u + 1], cand, out=cur[: T - u + 1])

    total = float(suffix[0, 0])
    if __debug__ and math.isfinite(total):
        # sanity bound: no segmentation can beat per-frame maxima plus
        # per-state duration maxima
        bound = float(np.max(obs.log_probs, axis=1).sum()) + sum(
            float(ld.max()) for ld in logds
        )
        assert total <= bound + 1e-9 * max(1.0, abs(bound)), "DP exceeded its upper bound"

    m_after = [0] * (N + 1)
    for j in range(N - 1, -1, -1):
        m_after[j] = m_after[j + 1] + caps[j]

    if not math.isfinite(total):
        # every segmentation has zero probability; the DP trail is vacuous, so
        # report the lexicographically smallest feasible composition, flagged
        # by the -inf score
        occupancies = []
        rem = T
        for j in range(N):
            u = max(1, rem - m_after[j + 1])
            occupancies.append(u)
            rem -= u
        return DecodeOutcome(path.phrase_id, tuple(occupancies), total)

    # forward reconstruction, smallest occupancy first at ties; candidate
    # values are recomputed with the exact arithmetic the DP used, so the
    # equality test is bitwise
    occupancies: list[int] = []
    t = 0
    for j in range(N):
        rem = T - t
        u_lo = max(1, rem - m_after[j + 1])
        u_hi = min(caps[j], rem - (N - 1 - j))
        target = suffix[j, t]
        nxt, logd, col = suffix[j + 1], logds[j], cols[j]
        chosen = 0
        if csums[j] is not None:
            csum = csums[j]
            for u in range(u_lo, u_hi + 1):
                if (logd[u - 1] + (csum[t + u] + nxt[t + u])) - csum[t] == target:
                    chosen = u
                    break
        else:
            g = 0.0
            for u in range(1, u_hi + 1):
                g = col[t] if u == 1 else g + col[t + u - 1]
                if u < u_lo:
                    continue
                if (logd[u - 1] + g) + nxt[t + u] == target:
                    chosen = u
                    break
        if chosen == 0:
            raise RuntimeError(
                f"path {path.phrase_id!r}: no occupancy reproduces the DP value at "
                f"state {j}, frame {t}"
            )
        occupancies.append(chosen)
        t += chosen
    return DecodeOutcome(path.phrase_id, tuple(occupancies), total)


def hmm_viterbi(obs: ObservationMatrix, path: DecodablePath) -> DecodeOutcome:
    """Standard left-to-right Viterbi baseline with implicit geometric occupancy.

    Self-transition of state j is max(0, 1 - hop_s/mu_s_j), so the geometric
    mean occupancy matches the state's mean duration in frames. The decode
    must start in the first state at the first frame and end in the last state
    at the last frame; leaving the last state at the end contributes its
    forward log probability, which makes the score equal (up to truncation) to
    a segmental decode under the geometric occupancy pmf.
    """
    _check_pair(obs, path)
    T = obs.n_frames
    N = path.n_states
    mus = np.asarray(path.mu_values)
    hop = path.hop_s
    p_stay = np.maximum(0.0, 1.0 - hop / mus)
    with np.errstate(divide="ignore"):
        log_stay = np.log(p_stay)
    log_move = np.log1p(-p_stay)
    idxs = [idx for idx, _ in path.states]
    obs_cols = obs.log_probs[:, idxs]

    # W[t][j] = best score of frames t..T-1 given state j emits frame t
    W = np.full((T, N), -np.inf)
    W[T - 1, N - 1] = obs_cols[T - 1, N - 1] + log_move[N - 1]
    move = np.empty(N)
    move[-1] = -np.inf
    for t in range(T - 2, -1, -1):
        wnext = W[t + 1]
        stay = log_stay + wnext
        if N > 1:
            move[:-1] = log_move[:-1] + wnext[1:]
        W[t] = obs_cols[t] + np.maximum(stay, move)
    total = float(W[0, 0])

    if not math.isfinite(total):
        # no positive-probability alignment (for example forced single-frame
        # states with N < T); report the lexicographically smallest composition
        occupancies = [1] * (N - 1) + [T - N + 1]
        return DecodeOutcome(path.phrase_id, tuple(occupancies), total)

    occupancies = []
    j, run = 0, 1
    for t in range(T - 1):
        if j < N - 1 and obs_cols[t, j] + (log_move[j] + W[t + 1, j + 1]) == W[t, j]:
            # prefer advancing on ties: earliest transitions make the
            # occupancy vector lexicographically minimal
            occupancies.append(run)
            run, j = 1, j + 1
        else:
            run += 1
    occupancies.append(run)
    if len(occupancies) != N:
        raise RuntimeError(
            f"path {path.phrase_id!r}: backtrace visited {len(occupancies)} of {N} states"
        )
    return DecodeOutcome(path.phrase_id, tuple(occupancies), total)


def duration_log_score(
    occupancies: Sequence[int], path: DecodablePath, gamma: float | None = None
) -> float:
    """Sum over states of log N(u_j * hop; mu_j, (gamma*mu_j)^2).

    ``gamma`` defaults to the value each state's distribution was built with.
    """
    total = 0.0
    for u, (_, dist) in zip(occupancies, path.states):
        g = dist.gamma if gamma is None else gamma
        total += gaussian_log_density(u * dist.hop_s, dist.mu_s, g * dist.mu_s)
    return total


def post_processor_rescore(outcome: DecodeOutcome, path: DecodablePath, alpha: float) -> float:
    """Add the weighted Gaussian duration log densities to a decoded score.

    With alpha = 0 the score is returned unchanged, so rankings reduce to the
    plain Viterbi baseline.
    """
    if alpha < 0:
        raise ValueError(f"alpha must be >= 0, got {alpha}")
    if len(outcome.occupancies) != path.n_states:
        raise ValueError(
            f"outcome has {len(outcome.occupancies)} occupancies, path "
            f"{path.phrase_id!r} has {path.n_states} states"
        )
    return outcome.log_posterior + alpha * duration_log_score(outcome.occupancies, path)


def _count_compositions(total: int, caps: Sequence[int]) -> int:
    """Number of ways to write ``total`` as ordered parts with 1 <= part_j <= caps[j]."""
    ways = [0] * (total + 1)
    ways[0] = 1
    for cap in caps:
        prefix = [0] * (total + 2)
        for t in range(total + 1):
            prefix[t + 1] = prefix[t] + ways[t]
        new = [0] * (total + 1)
        for t in range(1, total + 1):
            lo = max(0, t - cap)
            new[t] = prefix[t] - prefix[lo]
        ways = new
    return ways[total]


def _compositions(total: int, caps: Sequence[int]) -> Iterator[tuple[int, ...]]:
    """All valid occupancy vectors in ascending lexicographic order."""
    n = len(caps)
    suffix_max = [0] * (n + 1)
    for j in range(n - 1, -1, -1):
        suffix_max[j] = suffix_max[j + 1] + caps[j]

    def rec(j: int, rem: int, prefix: tuple[int, ...]) -> Iterator[tuple[int, ...]]:
        if j == n - 1:
            if 1 <= rem <= caps[j]:
                yield prefix + (rem,)
            return
        lo = max(1, rem - suffix_max[j + 1])
        hi = min(caps[j], rem - (n - 1 - j))
        for u in range(lo, hi + 1):
            yield from rec(j + 1, rem - u, prefix + (u,))

    return rec(0, total, ())


def brute_force_decode(
    obs: ObservationMatrix, path: DecodablePath, max_segmentations: int = 1_000_000
) -> DecodeOutcome:
    """Exact maximization by exhaustive enumeration; verification oracle.

    Scores every occupancy vector with the same objective as ``hsmm_viterbi``
    but through an independent code path (direct slice sums, direct pmf logs).
    """
    _check_pair(obs, path)
    T = obs.n_frames
    caps = [min(dist.M, T) for _, dist in path.states]
    count = _count_compositions(T, caps)
    if count == 0:
        raise ValueError(f"path {path.phrase_id!r}: no feasible segmentation")
    if count > max_segmentations:
        raise ValueError(
            f"path {path.phrase_id!r}: {count} segmentations exceed the "
            f"enumeration budget of {max_segmentations}"
        )
    cols = [obs.log_probs[:, idx] for idx, _ in path.states]
    pmfs = [dist.pmf for _, dist in path.states]
    best_score = -math.inf
    best_occ: tuple[int, ...] | None = None
    for occ in _compositions(T, caps):
        score = 0.0
        t = 0
        for j, u in enumerate(occ):
            p = float(pmfs[j][u - 1])
            score += math.log(p) if p > 0.0 else -math.inf
            score += float(np.sum(cols[j][t : t + u]))
            t += u
        if best_occ is None or score > best_score:
            best_score = score
            best_occ = occ
    assert best_occ is not None
    return DecodeOutcome(path.phrase_id, best_occ, best_score)
