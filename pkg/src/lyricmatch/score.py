"""Score-side domain model: phoneme inventory, score phrases, pronunciation lexicon.

All types here are immutable after construction and safe to share read-only
across concurrent decoders.

File formats are line based and tab separated. Blank lines and lines starting
with ``#`` are ignored everywhere. Floats are serialized with ``repr`` so that
every value round-trips exactly.

* score phrases:  ``phrase_id<TAB>role_type<TAB>pinyin:units pinyin:units ...``
* dictionary:     ``pinyin<TAB>phoneme phoneme ...``
* annotations:    ``phoneme<TAB>duration_seconds``
* inventory:      one phoneme label per line
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence

ROLE_TYPES = ("dan", "laosheng")

_DATA_DIR = Path(__file__).resolve().parent / "data"


class ParseError(ValueError):
    """A data file does not conform to its line format."""


def _records(path: str | Path) -> Iterator[tuple[int, str]]:
    """Yield (lineno, line) for non-blank, non-comment lines."""
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            yield lineno, line


def _fmt(x: float) -> str:
    return repr(float(x))


@dataclass(frozen=True)
class PhonemeInventory:
    """Ordered set of phoneme class labels; defines posteriorgram column order."""

    labels: tuple[str, ...]

    def __post_init__(self) -> None:
        if len(self.labels) < 1:
            raise ValueError("inventory must contain at least one phoneme label")
        if any(not lab for lab in self.labels):
            raise ValueError("inventory labels must be non-empty strings")
        if len(set(self.labels)) != len(self.labels):
            dupes = sorted({l for l in self.labels if self.labels.count(l) > 1})
            raise ValueError(f"duplicate inventory labels: {dupes}")
        object.__setattr__(self, "_index", {lab: i for i, lab in enumerate(self.labels)})

    def __len__(self) -> int:
        return len(self.labels)

    def __iter__(self) -> Iterator[str]:
        return iter(self.labels)

    def __contains__(self, label: str) -> bool:
        return label in self._index  # type: ignore[attr-defined]

    def index(self, label: str) -> int:
        try:
            return self._index[label]  # type: ignore[attr-defined]
        except KeyError:
            raise ValueError(f"phoneme {label!r} not in inventory") from None

    @classmethod
    def from_file(cls, path: str | Path) -> "PhonemeInventory":
        labels = [line for _, line in _records(path)]
        return cls(tuple(labels))

    def to_file(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for lab in self.labels:
                fh.write(lab + "\n")


@dataclass(frozen=True)
class Syllable:
    """One sung syllable with its relative note duration (rests pre-removed).

    ``duration_units`` is in score note-duration units, not seconds; a melisma
    (one syllable over several notes) carries the summed duration of its notes.
    """

    pinyin: str
    duration_units: float

    def __post_init__(self) -> None:
        if not self.pinyin or any(c.isspace() for c in self.pinyin) or ":" in self.pinyin:
            raise ValueError(f"invalid pinyin token {self.pinyin!r}")
        if not self.duration_units > 0:
            raise ValueError(
                f"syllable {self.pinyin!r}: duration_units must be > 0, got {self.duration_units}"
            )


@dataclass(frozen=True)
class ScorePhrase:
    phrase_id: str
    role_type: str
    syllables: tuple[Syllable, ...]

    def __post_init__(self) -> None:
        if not self.phrase_id or any(c.isspace() for c in self.phrase_id):
            raise ValueError(f"invalid phrase_id {self.phrase_id!r}")
        if self.role_type not in ROLE_TYPES:
            raise ValueError(
                f"phrase {self.phrase_id!r}: unknown role_type {self.role_type!r} "
                f"(expected one of {ROLE_TYPES})"
            )
        if len(self.syllables) < 1:
            raise ValueError(f"phrase {self.phrase_id!r}: needs at least one syllable")

    @property
    def pinyin(self) -> tuple[str, ...]:
        return tuple(s.pinyin for s in self.syllables)


@dataclass(frozen=True)
class AnnotationRecord:
    """One annotated phoneme occurrence from a training recording."""

    phoneme: str
    duration_s: float

    def __post_init__(self) -> None:
        if not self.phoneme:
            raise ValueError("annotation phoneme label must be non-empty")
        if not self.duration_s > 0:
            raise ValueError(
                f"annotation {self.phoneme!r}: duration_s must be > 0, got {self.duration_s}"
            )


class PronunciationDictionary:
    """Maps a pinyin syllable to its ordered phoneme expansion."""

    def __init__(self, entries: Mapping[str, Sequence[str]]):
        clean: dict[str, tuple[str, ...]] = {}
        for pinyin, phones in entries.items():
            phones = tuple(phones)
            if not phones:
                raise ValueError(f"dictionary entry {pinyin!r} maps to an empty expansion")
            clean[pinyin] = phones
        self._entries = clean

    def __contains__(self, pinyin: str) -> bool:
        return pinyin in self._entries

    def __len__(self) -> int:
        return len(self._entries)

    def __getitem__(self, pinyin: str) -> tuple[str, ...]:
        try:
            return self._entries[pinyin]
        except KeyError:
            raise ValueError(f"syllable {pinyin!r} not in pronunciation dictionary") from None

    def items(self):
        return self._entries.items()

    def validate_against(self, inventory: PhonemeInventory) -> None:
        """Raise if any expansion uses a label outside the inventory."""
        for pinyin, phones in self._entries.items():
            for ph in phones:
                if ph not in inventory:
                    raise ValueError(
                        f"dictionary entry {pinyin!r} uses phoneme {ph!r} "
                        "which is not in the inventory"
                    )

    @classmethod
    def from_file(cls, path: str | Path) -> "PronunciationDictionary":
        entries: dict[str, tuple[str, ...]] = {}
        for lineno, line in _records(path):
            parts = line.split("\t")
            if len(parts) != 2:
                raise ParseError(f"{path}:{lineno}: expected 'pinyin<TAB>phonemes', got {line!r}")
            pinyin, phones = parts[0], tuple(parts[1].split())
            if pinyin in entries:
                raise ParseError(f"{path}:{lineno}: duplicate dictionary entry {pinyin!r}")
            if not phones:
                raise ParseError(f"{path}:{lineno}: entry {pinyin!r} has no phonemes")
            entries[pinyin] = phones
        return cls(entries)

    def to_file(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for pinyin, phones in self._entries.items():
                fh.write(f"{pinyin}\t{' '.join(phones)}\n")


def phonetize(syllables: Sequence[str], dictionary: PronunciationDictionary) -> list[str]:
    """Expand pinyin syllables into one flat left-to-right phoneme sequence.

    The output is the in-order concatenation of each syllable's dictionary
    expansion; an out-of-vocabulary syllable raises naming the syllable.
    """
    out: list[str] = []
    for syl in syllables:
        out.extend(dictionary[syl])
    return out


def parse_score_line(line: str, lineno: int = 0, source: str = "<string>") -> ScorePhrase:
    parts = line.split("\t")
    if len(parts) != 3:
        raise ParseError(
            f"{source}:{lineno}: expected 3 tab-separated fields "
            f"(phrase_id, role_type, syllables), got {len(parts)}"
        )
    phrase_id, role_type, syl_field = parts
    syllables = []
    for token in syl_field.split():
        pinyin, sep, units = token.rpartition(":")
        if not sep or not pinyin:
            raise ParseError(f"{source}:{lineno}: malformed syllable token {token!r}")
        try:
            dur = float(units)
        except ValueError:
            raise ParseError(
                f"{source}:{lineno}: bad duration {units!r} in token {token!r}"
            ) from None
        try:
            syllables.append(Syllable(pinyin, dur))
        except ValueError as exc:
            raise ParseError(f"{source}:{lineno}: {exc}") from None
    try:
        return ScorePhrase(phrase_id, role_type, tuple(syllables))
    except ValueError as exc:
        raise ParseError(f"{source}:{lineno}: {exc}") from None


def format_score_line(phrase: ScorePhrase) -> str:
    syl = " ".join(f"{s.pinyin}:{_fmt(s.duration_units)}" for s in phrase.syllables)
    return f"{phrase.phrase_id}\t{phrase.role_type}\t{syl}"


def load_score_dataset(path: str | Path) -> list[ScorePhrase]:
    """Load all score phrases from a score-phrase file; duplicate ids rejected."""
    phrases: list[ScorePhrase] = []
    seen: set[str] = set()
    for lineno, line in _records(path):
        phrase = parse_score_line(line, lineno, str(path))
        if phrase.phrase_id in seen:
            raise ParseError(f"{path}:{lineno}: duplicate phrase_id {phrase.phrase_id!r}")
        seen.add(phrase.phrase_id)
        phrases.append(phrase)
    return phrases


def save_score_dataset(phrases: Iterable[ScorePhrase], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for phrase in phrases:
            fh.write(format_score_line(phrase) + "\n")


def load_annotations(path: str | Path) -> list[AnnotationRecord]:
    records: list[AnnotationRecord] = []
    for lineno, line in _records(path):
        parts = line.split("\t")
        if len(parts) != 2:
            raise ParseError(f"{path}:{lineno}: expected 'phoneme<TAB>duration_s', got {line!r}")
        try:
            dur = float(parts[1])
        except ValueError:
            raise ParseError(f"{path}:{lineno}: bad duration {parts[1]!r}") from None
        try:
            records.append(AnnotationRecord(parts[0], dur))
        except ValueError as exc:
            raise ParseError(f"{path}:{lineno}: {exc}") from None
    return records


def save_annotations(records: Iterable[AnnotationRecord], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(f"{rec.phoneme}\t{_fmt(rec.duration_s)}\n")


def default_inventory() -> PhonemeInventory:
    """The 32-class inventory shipped with the package."""
    return PhonemeInventory.from_file(_DATA_DIR / "inventory.txt")


def default_dictionary() -> PronunciationDictionary:
    """The pronunciation lexicon shipped with the package."""
    return PronunciationDictionary.from_file(_DATA_DIR / "dictionary.tsv")
