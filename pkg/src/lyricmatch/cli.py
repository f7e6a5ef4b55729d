"""Command line interface.

Subcommands cover the whole pipeline: duration stats from annotations, network
construction from scores, synthetic query generation, per-query decoding,
batch matching with MRR/Top-M aggregates, parameter grid search, and the GMM
feature path (fit-gmm / posteriorize).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import acoustic, evaluate, network as net, score, synthetic
from .decode import ObservationMatrix
from .durations import DurationStats, compute_duration_stats
from .evaluate import (
    DEFAULT_ALPHA,
    DEFAULT_ALPHA_GRID,
    DEFAULT_GAMMA_GRID,
    DEFAULT_GAMMA_HSMM,
    DEFAULT_GAMMA_POST,
)

_MODE_FLAGS = {"hsmm": "hsmm", "hmm": "hmm", "hmm-post": "hmm_post"}


def _load_inventory(args) -> score.PhonemeInventory:
    if args.inventory:
        return score.PhonemeInventory.from_file(args.inventory)
    return score.default_inventory()


def _resolve_gamma(args, network: net.MatchingNetwork) -> float:
    if args.gamma is not None:
        return args.gamma
    if _MODE_FLAGS[args.mode] == "hmm_post":
        roles = {p.role_type for p in network.paths}
        return DEFAULT_GAMMA_POST["laosheng" if roles == {"laosheng"} else "dan"]
    return DEFAULT_GAMMA_HSMM


def _read_manifest(path: Path) -> list[tuple[str, ObservationMatrix, str]]:
    """Each line: query_file<TAB>truth_phrase_id, paths relative to the manifest."""
    queries = []
    for lineno, line in score._records(path):
        parts = line.split("\t")
        if len(parts) != 2:
            raise score.ParseError(
                f"{path}:{lineno}: expected 'query_file<TAB>truth_phrase_id', got {line!r}"
            )
        qpath = path.parent / parts[0]
        queries.append((Path(parts[0]).stem, ObservationMatrix.from_file(qpath), parts[1]))
    return queries


def _grid_values(text: str) -> list[float]:
    """Parse 'start:stop:step' or a comma list into a float grid."""
    if ":" in text:
        start, stop, step = (float(x) for x in text.split(":"))
        n = int(round((stop - start) / step)) + 1
        return [start + i * step for i in range(n)]
    return [float(x) for x in text.split(",")]


def cmd_stats(args) -> int:
    annotations = score.load_annotations(args.annotations)
    stats = compute_duration_stats(annotations)
    stats.to_file(args.out)
    print(f"wrote centroids for {len(stats.centroids)} phonemes to {args.out}")
    return 0


def cmd_build_network(args) -> int:
    phrases = score.load_score_dataset(args.scores)
    dictionary = (
        score.PronunciationDictionary.from_file(args.dictionary)
        if args.dictionary
        else score.default_dictionary()
    )
    stats = DurationStats.from_file(args.stats)
    network = net.build_network(phrases, dictionary, stats, args.seconds_per_unit)
    net.save_network(network, args.out)
    print(f"built network with K={network.K} paths -> {args.out}")
    return 0


def cmd_decode(args) -> int:
    network = net.load_network(args.network)
    inventory = _load_inventory(args)
    obs = ObservationMatrix.from_file(args.query)
    if obs.row_normalization_error() > 1e-6:
        print(
            f"warning: query rows are not normalized posteriors "
            f"(max error {obs.row_normalization_error():.2e})",
            file=sys.stderr,
        )
    gamma = _resolve_gamma(args, network)
    candidates, excluded = evaluate.rank_candidates(
        obs, network, _MODE_FLAGS[args.mode], gamma, args.alpha, inventory
    )
    lines = [f"{c.phrase_id}\t{repr(c.log_score)}\t{c.rank}" for c in candidates]
    if args.top:
        lines = lines[: args.top]
    out = "\n".join(lines)
    if args.out:
        Path(args.out).write_text(out + "\n", encoding="utf-8")
    else:
        print(out)
    for x in excluded:
        print(f"warning: excluded {x.phrase_id}: {x.reason}", file=sys.stderr)
    return 0


def cmd_match(args) -> int:
    network = net.load_network(args.network)
    inventory = _load_inventory(args)
    queries = _read_manifest(Path(args.queries))
    gamma = _resolve_gamma(args, network)
    top_m = tuple(args.top_m) if args.top_m else evaluate.DEFAULT_TOP_M
    report = evaluate.match_queries(
        queries, network, _MODE_FLAGS[args.mode], gamma, args.alpha, inventory, top_m
    )
    if args.out:
        evaluate.save_match_report(report, args.out, max_candidates=args.max_candidates)
    print(evaluate.summarize_report(report))
    return 0


def cmd_gridsearch(args) -> int:
    network = net.load_network(args.network)
    inventory = _load_inventory(args)
    labeled = _read_manifest(Path(args.queries))
    dev = [(obs, truth) for _, obs, truth in labeled]
    alpha_grid = _grid_values(args.alpha_grid) if args.alpha_grid else list(DEFAULT_ALPHA_GRID)
    gamma_grid = _grid_values(args.gamma_grid) if args.gamma_grid else list(DEFAULT_GAMMA_GRID)
    result = evaluate.grid_search(
        dev, network, _MODE_FLAGS[args.mode], inventory, alpha_grid, gamma_grid
    )
    if args.out:
        evaluate.save_grid_result(result, args.out)
    b = result.best
    print(f"best: alpha={b.alpha} gamma={b.gamma} MRR={b.mrr:.4f}")
    for role in sorted(result.best_by_role):
        rb = result.best_by_role[role]
        print(
            f"best[{role}]: alpha={rb.alpha} gamma={rb.gamma} "
            f"MRR={rb.mrr_by_role[role]:.4f}"
        )
    return 0


def cmd_synth(args) -> int:
    network = net.load_network(args.network)
    inventory = _load_inventory(args)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    queries = synthetic.make_labeled_queries(
        network,
        inventory,
        args.num_queries,
        gamma_gen=args.gamma if args.gamma is not None else DEFAULT_GAMMA_HSMM,
        noise_temp=args.noise_temp,
        seed=args.seed,
        hop_s=args.hop_s,
    )
    manifest = []
    for query_id, obs, truth in queries:
        fname = f"{query_id}.post"
        obs.to_file(out_dir / fname)
        manifest.append(f"{fname}\t{truth}")
    (out_dir / "queries.tsv").write_text("\n".join(manifest) + "\n", encoding="utf-8")
    print(f"wrote {len(queries)} queries and manifest to {out_dir}")
    return 0


def cmd_fit_gmm(args) -> int:
    manifest = Path(args.features)
    by_class: dict[str, acoustic.FeatureMatrix] = {}
    for lineno, line in score._records(manifest):
        parts = line.split("\t")
        if len(parts) != 2:
            raise score.ParseError(
                f"{manifest}:{lineno}: expected 'phoneme<TAB>feature_file', got {line!r}"
            )
        by_class[parts[0]] = acoustic.FeatureMatrix.from_file(manifest.parent / parts[1])
    model = acoustic.fit_gmm_em(by_class, args.components, args.max_iters, args.seed)
    model.to_file(args.out)
    print(
        f"fitted {model.n_components}-component mixtures for {model.n_classes} "
        f"classes -> {args.out}"
    )
    return 0


def cmd_posteriorize(args) -> int:
    model = acoustic.GmmModel.from_file(args.model)
    features = acoustic.FeatureMatrix.from_file(args.features)
    obs = acoustic.posteriorize(features, model)
    obs.to_file(args.out)
    print(f"wrote {obs.n_frames}x{obs.n_classes} posteriorgram to {args.out}")
    return 0


def _add_mode_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--mode", choices=sorted(_MODE_FLAGS), default="hsmm")
    p.add_argument(
        "--gamma",
        type=float,
        default=None,
        help="duration std-dev/mean ratio (default: 0.1 for hsmm/hmm, "
        "role-typical value for hmm-post)",
    )
    p.add_argument("--alpha", type=float, default=DEFAULT_ALPHA)
    p.add_argument("--inventory", help="phoneme inventory file (default: packaged)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lyricmatch",
        description="Match sung-phrase posteriorgrams against score phrases.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("stats", help="estimate duration centroids from annotations")
    p.add_argument("--annotations", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("build-network", help="build the matching network from scores")
    p.add_argument("--scores", required=True)
    p.add_argument("--dictionary", help="pronunciation lexicon (default: packaged)")
    p.add_argument("--stats", required=True)
    p.add_argument("--seconds-per-unit", type=float, default=net.DEFAULT_SECONDS_PER_UNIT)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_build_network)

    p = sub.add_parser("decode", help="rank all candidates for one query")
    p.add_argument("--query", required=True)
    p.add_argument("--network", required=True)
    _add_mode_flags(p)
    p.add_argument("--top", type=int, help="print only the best N candidates")
    p.add_argument("--out")
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("match", help="match a labeled query set and report MRR/Top-M")
    p.add_argument("--queries", required=True, help="manifest: query_file<TAB>truth_id")
    p.add_argument("--network", required=True)
    _add_mode_flags(p)
    p.add_argument("--top-m", type=int, action="append", help="repeatable Top-M cutoffs")
    p.add_argument("--max-candidates", type=int, help="cap per-query cand record lines")
    p.add_argument("--out", help="write line-delimited report records here")
    p.set_defaults(func=cmd_match)

    p = sub.add_parser("gridsearch", help="maximize MRR over (alpha, gamma) grids")
    p.add_argument("--queries", required=True, help="manifest: query_file<TAB>truth_id")
    p.add_argument("--network", required=True)
    _add_mode_flags(p)
    p.add_argument("--alpha-grid", help="'start:stop:step' or comma list")
    p.add_argument("--gamma-grid", help="'start:stop:step' or comma list")
    p.add_argument("--out")
    p.set_defaults(func=cmd_gridsearch)

    p = sub.add_parser("synth", help="generate synthetic labeled queries from a network")
    p.add_argument("--network", required=True)
    p.add_argument("--inventory", help="phoneme inventory file (default: packaged)")
    p.add_argument("--num-queries", type=int, default=20)
    p.add_argument("--noise-temp", type=float, default=0.5)
    p.add_argument("--gamma", type=float, default=None, help="generation gamma (default 0.1)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--hop-s", type=float, default=0.01)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("fit-gmm", help="train per-class mixtures from labeled features")
    p.add_argument("--features", required=True, help="manifest: phoneme<TAB>feature_file")
    p.add_argument("--components", type=int, default=40)
    p.add_argument("--max-iters", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fit_gmm)

    p = sub.add_parser("posteriorize", help="features + model -> posteriorgram")
    p.add_argument("--features", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_posteriorize)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
