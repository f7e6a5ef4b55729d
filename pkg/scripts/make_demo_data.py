#!/usr/bin/env python3
"""Write a small demo dataset and drive the whole CLI pipeline over it.

Creates under --out-dir: annotations, a score file, then runs
stats -> build-network -> synth -> match -> gridsearch via the CLI entry
point, leaving every intermediate file on disk for inspection.
"""

import argparse
from pathlib import Path

import numpy as np

from lyricmatch.cli import main as cli
from lyricmatch.score import (
    AnnotationRecord,
    ScorePhrase,
    Syllable,
    default_dictionary,
    default_inventory,
    save_annotations,
    save_score_dataset,
)

DEMO_PHRASES = [
    ("demo-001", "dan", [("yan", 2.0), ("jian", 1.0), ("de", 0.5), ("hong", 1.5), ("ri", 1.0)]),
    ("demo-002", "laosheng", [("shan", 1.0), ("hai", 2.0), ("lao", 1.0), ("ge", 1.0)]),
    ("demo-003", "dan", [("ma", 0.5), ("ni", 0.5), ("hao", 1.0), ("ya", 1.5)]),
    ("demo-004", "laosheng", [("zhong", 1.0), ("wan", 1.0), ("mei", 2.0)]),
    ("demo-005", "dan", [("xian", 1.0), ("shan", 1.0), ("lu", 2.0)]),
]


def synth_annotations(inventory, seed=7, per_phoneme=40):
    """Annotation records with vowel-like and consonant-like duration scales."""
    rng = np.random.default_rng(seed)
    records = []
    for i, label in enumerate(inventory.labels):
        mean = 0.45 if len(label) > 1 or label in "aO7@iuy1" else 0.09
        for d in rng.normal(mean, 0.2 * mean, size=per_phoneme):
            records.append(AnnotationRecord(label, float(max(abs(d), 1e-3))))
    return records


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out-dir", default="demo")
    ap.add_argument("--queries", type=int, default=8)
    ap.add_argument("--noise-temp", type=float, default=0.4)
    args = ap.parse_args()

    root = Path(args.out_dir)
    root.mkdir(parents=True, exist_ok=True)
    inventory = default_inventory()
    lexicon = default_dictionary()

    phrases = []
    for pid, role, syls in DEMO_PHRASES:
        for pinyin, _ in syls:
            assert pinyin in lexicon, f"demo syllable {pinyin!r} missing from lexicon"
        phrases.append(ScorePhrase(pid, role, tuple(Syllable(p, d) for p, d in syls)))
    save_score_dataset(phrases, root / "scores.tsv")
    save_annotations(synth_annotations(inventory), root / "annotations.tsv")
    print(f"wrote {root}/scores.tsv and {root}/annotations.tsv")

    steps = [
        ["stats", "--annotations", f"{root}/annotations.tsv", "--out", f"{root}/stats.tsv"],
        [
            "build-network",
            "--scores", f"{root}/scores.tsv",
            "--stats", f"{root}/stats.tsv",
            "--out", f"{root}/network.tsv",
        ],
        [
            "synth",
            "--network", f"{root}/network.tsv",
            "--num-queries", str(args.queries),
            "--noise-temp", str(args.noise_temp),
            "--seed", "1",
            "--out-dir", f"{root}/queries",
        ],
        [
            "match",
            "--queries", f"{root}/queries/queries.tsv",
            "--network", f"{root}/network.tsv",
            "--mode", "hsmm",
            "--out", f"{root}/report.tsv",
        ],
        [
            "gridsearch",
            "--queries", f"{root}/queries/queries.tsv",
            "--network", f"{root}/network.tsv",
            "--mode", "hmm-post",
            "--alpha-grid", "0.5,1.0",
            "--gamma-grid", "0.1:0.5:0.1",
            "--out", f"{root}/grid.tsv",
        ],
    ]
    for step in steps:
        print(f"\n$ lyricmatch {' '.join(step)}")
        code = cli(step)
        if code != 0:
            raise SystemExit(code)


if __name__ == "__main__":
    main()
