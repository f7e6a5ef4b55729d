"""End-to-end matching: rank candidates per query, aggregate MRR and Top-M.

Candidate order is always deterministic: descending log score, ties broken by
ascending phrase_id. Decoding different candidates is independent work, so a
runner may process them in any order; the sort key alone fixes the report.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

from .decode import (
    DecodeOutcome,
    ObservationMatrix,
    duration_log_score,
    hmm_viterbi,
    hsmm_viterbi,
    post_processor_rescore,
)
from .network import DecodablePath, ExcludedPath, MatchingNetwork, instantiate_for_query
from .score import PhonemeInventory

MODES = ("hsmm", "hmm", "hmm_post")

# CLI defaults: grid-search optima per role-type
DEFAULT_ALPHA = 1.0
DEFAULT_GAMMA_HSMM = 0.1
DEFAULT_GAMMA_POST = {"dan": 0.7, "laosheng": 1.5}
DEFAULT_ALPHA_GRID = tuple(0.25 * i for i in range(1, 9))  # 0.25 .. 2.0
DEFAULT_GAMMA_GRID = tuple(0.1 * i for i in range(1, 21))  # 0.1 .. 2.0
DEFAULT_TOP_M = (1, 3, 5, 10, 20)


@dataclass(frozen=True)
class Candidate:
    phrase_id: str
    log_score: float
    rank: int


@dataclass(frozen=True)
class QueryResult:
    query_id: str
    truth_id: str
    rank: int
    candidates: tuple[Candidate, ...]
    excluded: tuple[ExcludedPath, ...]


@dataclass(frozen=True)
class MatchReport:
    queries: tuple[QueryResult, ...]
    mrr: float
    top_m: Mapping[int, float]
    n: int


@dataclass(frozen=True)
class GridPoint:
    alpha: float
    gamma: float
    mrr: float
    mrr_by_role: Mapping[str, float]


@dataclass(frozen=True)
class GridSearchResult:
    points: tuple[GridPoint, ...]
    best: GridPoint
    best_by_role: Mapping[str, GridPoint]


def mrr(ranks: Sequence[int]) -> float:
    """Mean reciprocal rank, 1/n * sum(1/rank_i)."""
    if not ranks:
        raise ValueError("mrr of an empty rank list")
    if any(r < 1 for r in ranks):
        raise ValueError(f"ranks must be >= 1, got {list(ranks)}")
    return sum(1.0 / r for r in ranks) / len(ranks)


def top_m_hit(ranks: Sequence[int], m: int) -> float:
    """Fraction of queries whose ground truth ranked within the top m."""
    if not ranks:
        raise ValueError("top_m_hit of an empty rank list")
    if m < 1:
        raise ValueError(f"M must be >= 1, got {m}")
    return sum(1 for r in ranks if r <= m) / len(ranks)


def _score_candidates(
    obs: ObservationMatrix,
    paths: Sequence[DecodablePath],
    mode: str,
    alpha: float,
) -> list[tuple[str, float]]:
    scored = []
    for p in paths:
        if mode == "hsmm":
            s = hsmm_viterbi(obs, p).log_posterior
        elif mode == "hmm":
            s = hmm_viterbi(obs, p).log_posterior
        elif mode == "hmm_post":
            s = post_processor_rescore(hmm_viterbi(obs, p), p, alpha)
        else:
            raise ValueError(f"unknown mode {mode!r}, expected one of {MODES}")
        scored.append((p.phrase_id, s))
    return scored


def _to_ranked(scored: Sequence[tuple[str, float]]) -> list[Candidate]:
    ordered = sorted(scored, key=lambda it: (-it[1], it[0]))
    return [Candidate(pid, s, rank) for rank, (pid, s) in enumerate(ordered, start=1)]


def rank_candidates(
    obs: ObservationMatrix,
    network: MatchingNetwork,
    mode: str,
    gamma: float,
    alpha: float,
    inventory: PhonemeInventory,
) -> tuple[list[Candidate], list[ExcludedPath]]:
    """Decode every candidate against the query and rank by log score."""
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}, expected one of {MODES}")
    paths, excluded = instantiate_for_query(
        network, obs.duration_s, gamma, obs.hop_s, inventory
    )
    if not paths:
        raise ValueError(
            f"all {network.K} candidate paths are undecodable for a query of "
            f"{obs.n_frames} frames"
        )
    return _to_ranked(_score_candidates(obs, paths, mode, alpha)), excluded


def _truth_rank(candidates: Sequence[Candidate], truth_id: str) -> int:
    for c in candidates:
        if c.phrase_id == truth_id:
            return c.rank
    # ground truth was excluded as undecodable: rank below every candidate
    return len(candidates) + 1


def match_queries(
    labeled_queries: Sequence[tuple[str, ObservationMatrix, str]],
    network: MatchingNetwork,
    mode: str,
    gamma: float,
    alpha: float,
    inventory: PhonemeInventory,
    top_m_values: Sequence[int] = DEFAULT_TOP_M,
) -> MatchReport:
    """Rank every (query_id, posteriorgram, truth phrase_id) and aggregate."""
    if not labeled_queries:
        raise ValueError("no queries to match")
    known = {p.phrase_id for p in network.paths}
    results = []
    for query_id, obs, truth_id in labeled_queries:
        if truth_id not in known:
            raise ValueError(f"query {query_id!r}: ground truth {truth_id!r} not in network")
        candidates, excluded = rank_candidates(obs, network, mode, gamma, alpha, inventory)
        rank = _truth_rank(candidates, truth_id)
        results.append(
            QueryResult(query_id, truth_id, rank, tuple(candidates), tuple(excluded))
        )
    ranks = [r.rank for r in results]
    return MatchReport(
        queries=tuple(results),
        mrr=mrr(ranks),
        top_m={m: top_m_hit(ranks, m) for m in top_m_values},
        n=len(results),
    )


def _grid_best(points: Sequence[GridPoint], key: str | None = None) -> GridPoint:
    """Highest MRR; ties prefer smallest alpha, then smallest gamma."""

    def value(pt: GridPoint) -> float:
        return pt.mrr if key is None else pt.mrr_by_role[key]

    best = points[0]
    for pt in points[1:]:
        if value(pt) > value(best) or (
            value(pt) == value(best) and (pt.alpha, pt.gamma) < (best.alpha, best.gamma)
        ):
            best = pt
    return best


def grid_search(
    dev_queries: Sequence[tuple[ObservationMatrix, str]],
    network: MatchingNetwork,
    mode: str,
    inventory: PhonemeInventory,
    alpha_grid: Sequence[float] = DEFAULT_ALPHA_GRID,
    gamma_grid: Sequence[float] = DEFAULT_GAMMA_GRID,
) -> GridSearchResult:
    """Evaluate MRR at every (alpha, gamma) grid point on a development set.

    Decoding is shared where a parameter cannot change the result: alpha for
    the hsmm/hmm modes (it never enters their scores), and both grid axes for
    the standard-Viterbi pass of hmm_post (its decode depends only on state
    means, so only the rescoring term is recomputed per point).
    """
    if not dev_queries:
        raise ValueError("empty development set")
    if not alpha_grid or not gamma_grid:
        raise ValueError("alpha_grid and gamma_grid must be non-empty")
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}, expected one of {MODES}")
    role_of = {p.phrase_id: p.role_type for p in network.paths}
    truths = [truth for _, truth in dev_queries]
    for truth in truths:
        if truth not in role_of:
            raise ValueError(f"ground truth {truth!r} not in network")
    roles = sorted(set(role_of[t] for t in truths))

    def aggregate(ranks: Sequence[int]) -> tuple[float, dict[str, float]]:
        overall = mrr(ranks)
        by_role = {}
        for role in roles:
            sub = [r for r, t in zip(ranks, truths) if role_of[t] == role]
            by_role[role] = mrr(sub)
        return overall, by_role

    points: list[GridPoint] = []
    if mode in ("hsmm", "hmm"):
        for gamma in gamma_grid:
            ranks = []
            for obs, truth in dev_queries:
                candidates, _ = rank_candidates(obs, network, mode, gamma, 0.0, inventory)
                ranks.append(_truth_rank(candidates, truth))
            overall, by_role = aggregate(ranks)
            # alpha never enters these scores; every alpha point shares the MRR
            for alpha in alpha_grid:
                points.append(GridPoint(alpha, gamma, overall, by_role))
    else:
        # decode once per query; mean durations (hence the standard-Viterbi
        # pass) do not depend on gamma
        decoded: list[tuple[list[tuple[DecodablePath, DecodeOutcome]], str]] = []
        for obs, truth in dev_queries:
            paths, _ = instantiate_for_query(
                network, obs.duration_s, gamma_grid[0], obs.hop_s, inventory
            )
            if not paths:
                raise ValueError(
                    f"all candidate paths undecodable for a query of {obs.n_frames} frames"
                )
            decoded.append(([(p, hmm_viterbi(obs, p)) for p in paths], truth))
        for alpha in alpha_grid:
            for gamma in gamma_grid:
                ranks = []
                for outcomes, truth in decoded:
                    scored = [
                        (p.phrase_id, o.log_posterior
                         + alpha * duration_log_score(o.occupancies, p, gamma=gamma))
                        for p, o in outcomes
                    ]
                    ranks.append(_truth_rank(_to_ranked(scored), truth))
                overall, by_role = aggregate(ranks)
                points.append(GridPoint(alpha, gamma, overall, by_role))

    best = _grid_best(points)
    best_by_role = {role: _grid_best(points, key=role) for role in roles}
    return GridSearchResult(tuple(points), best, best_by_role)


def save_match_report(report: MatchReport, path: str | Path, max_candidates: int | None = None) -> None:
    """Line-delimited records: one 'query' line, 'cand'/'excl' detail lines, aggregates."""
    with open(path, "w", encoding="utf-8") as fh:
        for q in report.queries:
            fh.write(f"query\t{q.query_id}\t{q.truth_id}\t{q.rank}\n")
            cands = q.candidates if max_candidates is None else q.candidates[:max_candidates]
            for c in cands:
                fh.write(f"cand\t{q.query_id}\t{c.phrase_id}\t{repr(c.log_score)}\t{c.rank}\n")
            for x in q.excluded:
                fh.write(f"excl\t{q.query_id}\t{x.phrase_id}\t{x.reason}\n")
        fh.write(f"n\t{report.n}\n")
        fh.write(f"mrr\t{repr(report.mrr)}\n")
        for m in sorted(report.top_m):
            fh.write(f"topm\t{m}\t{repr(report.top_m[m])}\n")


def save_grid_result(result: GridSearchResult, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for pt in result.points:
            fh.write(f"point\t{repr(pt.alpha)}\t{repr(pt.gamma)}\t{repr(pt.mrr)}\n")
        b = result.best
        fh.write(f"best\t{repr(b.alpha)}\t{repr(b.gamma)}\t{repr(b.mrr)}\n")
        for role in sorted(result.best_by_role):
            rb = result.best_by_role[role]
            fh.write(
                f"best_role\t{role}\t{repr(rb.alpha)}\t{repr(rb.gamma)}\t"
                f"{repr(rb.mrr_by_role[role])}\n"
            )


def summarize_report(report: MatchReport) -> str:
    lines = [f"queries: {report.n}", f"MRR: {report.mrr:.4f}"]
    for m in sorted(report.top_m):
        lines.append(f"top-{m} hit: {report.top_m[m]:.4f}")
    excluded = sum(len(q.excluded) for q in report.queries)
    if excluded:
        lines.append(f"excluded path instances: {excluded}")
    return "\n".join(lines)
