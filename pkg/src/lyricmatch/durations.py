"""Phoneme duration estimation and per-state duration distributions.

Everything here is a pure function over immutable inputs. Durations flow
through four steps: centroid estimation from annotations, proportional
splitting of syllable durations, normalization of a whole path to the query
length, and discretization into a per-state occupancy distribution over
whole frames.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .score import AnnotationRecord, ParseError, _fmt, _records


@dataclass(frozen=True)
class DurationStats:
    """Per-phoneme duration centroids (arithmetic means) with sample counts."""

    centroids: Mapping[str, float]
    counts: Mapping[str, int]

    def __post_init__(self) -> None:
        if set(self.centroids) != set(self.counts):
            raise ValueError("centroids and counts must cover the same phonemes")
        for ph, c in self.centroids.items():
            if not c > 0:
                raise ValueError(f"centroid for {ph!r} must be > 0, got {c}")
        for ph, n in self.counts.items():
            if n < 1:
                raise ValueError(f"count for {ph!r} must be >= 1, got {n}")

    def centroid(self, phoneme: str) -> float:
        try:
            return self.centroids[phoneme]
        except KeyError:
            raise ValueError(f"no duration centroid for phoneme {phoneme!r}") from None

    def to_file(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for ph in self.centroids:
                fh.write(f"{ph}\t{_fmt(self.centroids[ph])}\t{self.counts[ph]}\n")

    @classmethod
    def from_file(cls, path: str | Path) -> "DurationStats":
        centroids: dict[str, float] = {}
        counts: dict[str, int] = {}
        for lineno, line in _records(path):
            parts = line.split("\t")
            if len(parts) != 3:
                raise ParseError(
                    f"{path}:{lineno}: expected 'phoneme<TAB>centroid_s<TAB>count', got {line!r}"
                )
            ph = parts[0]
            if ph in centroids:
                raise ParseError(f"{path}:{lineno}: duplicate phoneme {ph!r}")
            try:
                centroids[ph] = float(parts[1])
                counts[ph] = int(parts[2])
            except ValueError:
                raise ParseError(f"{path}:{lineno}: bad numeric field in {line!r}") from None
        return cls(centroids, counts)


def compute_duration_stats(annotations: Sequence[AnnotationRecord]) -> DurationStats:
    """Aggregate annotated durations into a per-phoneme centroid (mean)."""
    if not annotations:
        raise ValueError("cannot compute duration stats from an empty annotation list")
    totals: dict[str, float] = {}
    counts: dict[str, int] = {}
    for rec in annotations:
        totals[rec.phoneme] = totals.get(rec.phoneme, 0.0) + rec.duration_s
        counts[rec.phoneme] = counts.get(rec.phoneme, 0) + 1
    centroids = {ph: totals[ph] / counts[ph] for ph in totals}
    return DurationStats(centroids, counts)


def split_syllable_duration(
    syllable_dur_s: float, phonemes: Sequence[str], stats: DurationStats
) -> list[float]:
    """Split one syllable's duration across its phonemes by centroid proportion.

    output_i = syllable_dur_s * centroid_i / sum(centroids); the outputs sum
    back to the syllable duration.
    """
    if not syllable_dur_s > 0:
        raise ValueError(f"syllable_dur_s must be > 0, got {syllable_dur_s}")
    if not phonemes:
        raise ValueError("cannot split a syllable with no phonemes")
    cents = [stats.centroid(ph) for ph in phonemes]
    total = sum(cents)
    return [syllable_dur_s * c / total for c in cents]


def normalize_path_durations(durations: Sequence[float], query_dur_s: float) -> list[float]:
    """Scale state durations so they sum to the query duration."""
    if not durations:
        raise ValueError("cannot normalize an empty duration list")
    if not query_dur_s > 0:
        raise ValueError(f"query_dur_s must be > 0, got {query_dur_s}")
    for d in durations:
        if not d > 0:
            raise ValueError(f"durations must be > 0, got {d}")
    scale = query_dur_s / sum(durations)
    return [d * scale for d in durations]


@dataclass(frozen=True, eq=False)
class StateDurationDist:
    """Discretized occupancy distribution of one state over u = 1..M frames.

    ``pmf[u-1]`` is the probability of spending exactly u frames in the state.
    ``mu_s`` and ``gamma`` record the Gaussian parameters the distribution was
    built from (standard deviation = gamma * mu_s); they are kept so that
    rescoring can re-evaluate the continuous density.
    """

    mu_s: float
    gamma: float
    hop_s: float
    pmf: np.ndarray
    M: int

    def __post_init__(self) -> None:
        if not self.mu_s > 0:
            raise ValueError(f"mu_s must be > 0, got {self.mu_s}")
        if not self.gamma > 0:
            raise ValueError(f"gamma must be > 0, got {self.gamma}")
        if not self.hop_s > 0:
            raise ValueError(f"hop_s must be > 0, got {self.hop_s}")
        pmf = np.asarray(self.pmf, dtype=np.float64).copy()
        if pmf.ndim != 1 or pmf.shape[0] != self.M or self.M < 1:
            raise ValueError(f"pmf must be a length-M vector with M >= 1, got shape {pmf.shape}")
        if np.any(pmf < 0):
            raise ValueError("pmf entries must be >= 0")
        if abs(float(pmf.sum()) - 1.0) > 1e-9:
            raise ValueError(f"pmf must sum to 1 within 1e-9, got {pmf.sum()!r}")
        pmf.flags.writeable = False
        object.__setattr__(self, "pmf", pmf)
        with np.errstate(divide="ignore"):
            log_pmf = np.log(pmf)
        log_pmf.flags.writeable = False
        object.__setattr__(self, "_log_pmf", log_pmf)

    @property
    def log_pmf(self) -> np.ndarray:
        """Natural-log pmf; zero-probability occupancies map to -inf."""
        return self._log_pmf  # type: ignore[attr-defined]

    @property
    def mode(self) -> int:
        """Most probable occupancy in frames (1-based)."""
        return int(np.argmax(self.pmf)) + 1


def discretize_duration(mu_s: float, gamma: float, hop_s: float) -> StateDurationDist:
    """Build the per-frame occupancy pmf from a Gaussian duration model.

    The Gaussian N(x; mu_s, (gamma*mu_s)^2) is evaluated at frame centers
    u*hop_s for u = 1..M and renormalized. Support is truncated at
    M = ceil((mu_s + 4*gamma*mu_s)/hop_s), which keeps >= 99.99% of the mass.
    """
    if not mu_s > 0:
        raise ValueError(f"mu_s must be > 0, got {mu_s}")
    if not gamma > 0:
        raise ValueError(f"gamma must be > 0, got {gamma}")
    if not hop_s > 0:
        raise ValueError(f"hop_s must be > 0, got {hop_s}")
    M = max(1, math.ceil((mu_s + 4.0 * gamma * mu_s) / hop_s))
    u = np.arange(1, M + 1, dtype=np.float64)
    sigma = gamma * mu_s
    z = (u * hop_s - mu_s) / sigma
    weights = np.exp(-0.5 * z * z)
    pmf = weights / weights.sum()
    return StateDurationDist(mu_s=mu_s, gamma=gamma, hop_s=hop_s, pmf=pmf, M=M)


def geometric_occupancy(p_self: float, u: int) -> float:
    """Probability of staying exactly u frames in a state with self-loop p_self.

    This is the 1-shifted geometric distribution (1 - p_self) * p_self**(u-1),
    the occupancy a standard Markov state imposes implicitly.
    """
    if not 0.0 <= p_self < 1.0:
        raise ValueError(f"p_self must be in [0, 1), got {p_self}")
    if u < 1:
        raise ValueError(f"u must be >= 1, got {u}")
    return (1.0 - p_self) * p_self ** (u - 1)


def gaussian_log_density(x: float, mean: float, std: float) -> float:
    """log N(x; mean, std^2) for std > 0."""
    if not std > 0:
        raise ValueError(f"std must be > 0, got {std}")
    z = (x - mean) / std
    return -0.5 * math.log(2.0 * math.pi) - math.log(std) - 0.5 * z * z
