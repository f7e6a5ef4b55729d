import numpy as np
import pytest
from hypothesis import settings

from lyricmatch.durations import DurationStats, compute_duration_stats
from lyricmatch.score import (
    AnnotationRecord,
    ScorePhrase,
    Syllable,
    default_dictionary,
    default_inventory,
)

settings.register_profile("default", deadline=None)
settings.load_profile("default")


@pytest.fixture(scope="session")
def inventory():
    return default_inventory()


@pytest.fixture(scope="session")
def lexicon():
    return default_dictionary()


@pytest.fixture(scope="session")
def stats_all(inventory):
    """Deterministic centroids covering every inventory phoneme."""
    centroids = {lab: 0.08 + 0.03 * (i % 9) for i, lab in enumerate(inventory.labels)}
    counts = {lab: 10 for lab in inventory.labels}
    return DurationStats(centroids, counts)


@pytest.fixture(scope="session")
def demo_phrases():
    return [
        ScorePhrase(
            "demo-001",
            "dan",
            (
                Syllable("yan", 2.0),
                Syllable("jian", 1.0),
                Syllable("de", 0.5),
                Syllable("hong", 1.5),
                Syllable("ri", 1.0),
            ),
        ),
        ScorePhrase(
            "demo-002",
            "laosheng",
            (Syllable("shan", 1.0), Syllable("hai", 2.0), Syllable("lao", 1.0)),
        ),
        ScorePhrase(
            "demo-003",
            "dan",
            (Syllable("ma", 0.5), Syllable("ni", 0.5), Syllable("hao", 1.0)),
        ),
    ]


@pytest.fixture(scope="session")
def annotations_sample():
    rng = np.random.default_rng(99)
    recs = []
    for ph, mean in (("a", 0.5), ("m", 0.1), ("En", 0.6), ("j", 0.15)):
        for d in rng.normal(mean, mean * 0.2, size=40):
            recs.append(AnnotationRecord(ph, float(abs(d)) + 1e-3))
    return recs


@pytest.fixture(scope="session")
def annotation_stats(annotations_sample):
    return compute_duration_stats(annotations_sample)
