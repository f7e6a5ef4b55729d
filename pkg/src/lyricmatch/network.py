"""Candidate lyric paths and the isolated-phrase matching network.

A network holds one left-to-right phoneme chain per candidate phrase, with a
mean duration (seconds) per state. States are absolute at build time but only
their proportions matter: instantiating for a query rescales every path to the
query length, so the seconds-per-unit chosen at build time cancels out.

Network file format (tab separated, ``#`` comments ignored):
``phrase_id<TAB>role_type<TAB>phoneme:mu_s phoneme:mu_s ...``
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .durations import (
    DurationStats,
    StateDurationDist,
    discretize_duration,
    normalize_path_durations,
    split_syllable_duration,
)
from .score import (
    ParseError,
    PhonemeInventory,
    PronunciationDictionary,
    ScorePhrase,
    _fmt,
    _records,
    ROLE_TYPES,
)

DEFAULT_SECONDS_PER_UNIT = 0.5


@dataclass(frozen=True)
class LyricPath:
    """One candidate phrase as a chain of (phoneme label, mean duration) states."""

    phrase_id: str
    role_type: str
    states: tuple[tuple[str, float], ...]

    def __post_init__(self) -> None:
        if len(self.states) < 1:
            raise ValueError(f"path {self.phrase_id!r}: needs at least one state")
        for label, mu in self.states:
            if not mu > 0:
                raise ValueError(f"path {self.phrase_id!r}: state {label!r} has mu_s {mu} <= 0")

    @property
    def n_states(self) -> int:
        return len(self.states)


@dataclass(frozen=True)
class MatchingNetwork:
    paths: tuple[LyricPath, ...]

    def __post_init__(self) -> None:
        if len(self.paths) < 1:
            raise ValueError("a matching network needs at least one path")
        ids = [p.phrase_id for p in self.paths]
        if len(set(ids)) != len(ids):
            dupes = sorted({i for i in ids if ids.count(i) > 1})
            raise ValueError(f"duplicate phrase_ids in network: {dupes}")

    @property
    def K(self) -> int:
        return len(self.paths)

    def path(self, phrase_id: str) -> LyricPath:
        for p in self.paths:
            if p.phrase_id == phrase_id:
                return p
        raise ValueError(f"phrase_id {phrase_id!r} not in network")


@dataclass(frozen=True, eq=False)
class DecodablePath:
    """A path instantiated for one query: phoneme indices plus occupancy dists.

    State duration means sum to the query duration; every state's distribution
    shares the query's frame hop.
    """

    phrase_id: str
    states: tuple[tuple[int, StateDurationDist], ...]
    n_classes: int

    def __post_init__(self) -> None:
        if len(self.states) < 1:
            raise ValueError(f"decodable path {self.phrase_id!r}: needs at least one state")
        hops = {dist.hop_s for _, dist in self.states}
        if len(hops) != 1:
            raise ValueError(f"decodable path {self.phrase_id!r}: mixed hop_s values {hops}")
        for idx, _ in self.states:
            if not 0 <= idx < self.n_classes:
                raise ValueError(
                    f"decodable path {self.phrase_id!r}: phoneme index {idx} "
                    f"outside [0, {self.n_classes})"
                )

    @property
    def n_states(self) -> int:
        return len(self.states)

    @property
    def hop_s(self) -> float:
        return self.states[0][1].hop_s

    @property
    def mu_values(self) -> list[float]:
        return [dist.mu_s for _, dist in self.states]


@dataclass(frozen=True)
class ExcludedPath:
    """Warning record for a path that cannot be decoded against a query."""

    phrase_id: str
    n_states: int
    n_frames: int
    reason: str


def build_network(
    phrases: Sequence[ScorePhrase],
    dictionary: PronunciationDictionary,
    stats: DurationStats,
    seconds_per_unit: float = DEFAULT_SECONDS_PER_UNIT,
) -> MatchingNetwork:
    """Build one lyric path per score phrase.

    Each syllable's duration (duration_units * seconds_per_unit) is split
    across its phonemes by centroid proportion; the per-phrase state chain is
    the concatenation of the syllable expansions.
    """
    if not phrases:
        raise ValueError("cannot build a matching network from zero phrases")
    if not seconds_per_unit > 0:
        raise ValueError(f"seconds_per_unit must be > 0, got {seconds_per_unit}")
    paths = []
    for phrase in phrases:
        states: list[tuple[str, float]] = []
        for syl in phrase.syllables:
            try:
                phones = dictionary[syl.pinyin]
                durs = split_syllable_duration(
                    syl.duration_units * seconds_per_unit, phones, stats
                )
            except ValueError as exc:
                raise ValueError(f"phrase {phrase.phrase_id!r}: {exc}") from None
            states.extend(zip(phones, durs))
        paths.append(LyricPath(phrase.phrase_id, phrase.role_type, tuple(states)))
    return MatchingNetwork(tuple(paths))


def instantiate_for_query(
    network: MatchingNetwork,
    query_dur_s: float,
    gamma: float,
    hop_s: float,
    inventory: PhonemeInventory,
) -> tuple[list[DecodablePath], list[ExcludedPath]]:
    """Rescale every path to the query duration and discretize its states.

    Paths with more states than the query has frames cannot be decoded (each
    state needs at least one frame); they are excluded and reported in the
    returned warning list instead of aborting the query.
    """
    if not query_dur_s > 0:
        raise ValueError(f"query_dur_s must be > 0, got {query_dur_s}")
    n_frames = int(round(query_dur_s / hop_s))
    decodable: list[DecodablePath] = []
    excluded: list[ExcludedPath] = []
    for path in network.paths:
        if path.n_states > n_frames:
            excluded.append(
                ExcludedPath(
                    path.phrase_id,
                    path.n_states,
                    n_frames,
                    f"{path.n_states} states exceed {n_frames} query frames",
                )
            )
            continue
        mus = normalize_path_durations([mu for _, mu in path.states], query_dur_s)
        states = tuple(
            (inventory.index(label), discretize_duration(mu, gamma, hop_s))
            for (label, _), mu in zip(path.states, mus)
        )
        decodable.append(DecodablePath(path.phrase_id, states, len(inventory)))
    return decodable, excluded


def save_network(network: MatchingNetwork, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for p in network.paths:
            states = " ".join(f"{label}:{_fmt(mu)}" for label, mu in p.states)
            fh.write(f"{p.phrase_id}\t{p.role_type}\t{states}\n")


def load_network(path: str | Path) -> MatchingNetwork:
    paths: list[LyricPath] = []
    for lineno, line in _records(path):
        parts = line.split("\t")
        if len(parts) != 3:
            raise ParseError(
                f"{path}:{lineno}: expected 'phrase_id<TAB>role_type<TAB>states', got {line!r}"
            )
        phrase_id, role_type, state_field = parts
        if role_type not in ROLE_TYPES:
            raise ParseError(f"{path}:{lineno}: unknown role_type {role_type!r}")
        states = []
        for token in state_field.split():
            label, sep, mu = token.rpartition(":")
            if not sep or not label:
                raise ParseError(f"{path}:{lineno}: malformed state token {token!r}")
            try:
                states.append((label, float(mu)))
            except ValueError:
                raise ParseError(f"{path}:{lineno}: bad mu_s {mu!r} in {token!r}") from None
        try:
            paths.append(LyricPath(phrase_id, role_type, tuple(states)))
        except ValueError as exc:
            raise ParseError(f"{path}:{lineno}: {exc}") from None
    return MatchingNetwork(tuple(paths))
