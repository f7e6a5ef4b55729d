"""Acceptance suite: one test per criterion, tolerances pinned.

Each test prints one `ACCEPTANCE nn <name>: PASS|FAIL` line (visible with
``pytest tests/test_acceptance.py -v -s``) and asserts the criterion at its
stated tolerance, including the runtime budget of the measured section.
"""

import math
import time

import numpy as np
import pytest

import lyricmatch as lm
from lyricmatch.acoustic import (
    FeatureMatrix,
    GmmModel,
    em_fit_diagonal,
    fit_gmm_em,
    frame_accuracy,
    posteriorize,
)
from lyricmatch.decode import hmm_viterbi, hsmm_viterbi, post_processor_rescore
from lyricmatch.durations import DurationStats, split_syllable_duration
from lyricmatch.evaluate import (
    DEFAULT_ALPHA_GRID,
    DEFAULT_GAMMA_GRID,
    grid_search,
    match_queries,
    mrr,
    rank_candidates,
    top_m_hit,
)
from lyricmatch.network import MatchingNetwork, instantiate_for_query
from lyricmatch.score import phonetize
from lyricmatch.synthetic import make_labeled_queries, random_network

from helpers import geometric_path, random_duration_path, random_posterior_obs


def _criterion(num, name, elapsed_s, budget_s, checks):
    failed = [label for label, ok in checks.items() if not ok]
    if elapsed_s >= budget_s:
        failed.append(f"runtime {elapsed_s:.3f}s over the {budget_s}s budget")
    status = "PASS" if not failed else "FAIL"
    print(f"ACCEPTANCE {num:02d} {name}: {status} ({elapsed_s:.4f}s)")
    assert not failed, f"criterion {num} ({name}): {failed}"


# ---------------------------------------------------------------- fixtures


@pytest.fixture(scope="module")
def benchmark(inventory):
    """100-path synthetic network (15 duration-twin pairs), 50 moderate-noise
    queries, hsmm and hmm match reports, and raw hmm outcomes for rescoring."""
    network = random_network(inventory, n_paths=100, seed=20260809, twin_pairs=15)
    queries = make_labeled_queries(
        network, inventory, 50, gamma_gen=0.1, noise_temp=0.5, seed=424242
    )
    t0 = time.perf_counter()
    report_hsmm = match_queries(queries, network, "hsmm", 0.1, 1.0, inventory)
    report_hmm = match_queries(queries, network, "hmm", 0.1, 1.0, inventory)
    elapsed = time.perf_counter() - t0
    hmm_outcomes = {}
    for query_id, obs, _ in queries:
        paths, _ = instantiate_for_query(network, obs.duration_s, 0.1, obs.hop_s, inventory)
        hmm_outcomes[query_id] = [(p, hmm_viterbi(obs, p)) for p in paths]
    return {
        "network": network,
        "queries": queries,
        "report_hsmm": report_hsmm,
        "report_hmm": report_hmm,
        "hmm_outcomes": hmm_outcomes,
        "elapsed_match": elapsed,
    }


# ---------------------------------------------------------------- criteria


def test_criterion_01_syllable_split_reference_values():
    stats = DurationStats({"p1": 0.46, "p2": 0.9, "p3": 0.1}, {"p1": 1, "p2": 1, "p3": 1})
    t0 = time.perf_counter()
    durations = split_syllable_duration(2.0, ["p1", "p2", "p3"], stats)
    elapsed = time.perf_counter() - t0
    proportions = [d / 2.0 for d in durations]
    dur_ok = all(abs(d - e) <= 0.02 for d, e in zip(durations, (0.64, 1.24, 0.12)))
    prop_ok = all(abs(p - e) <= 0.005 for p, e in zip(proportions, (0.32, 0.62, 0.06)))
    _criterion(
        1,
        "syllable-split-reference",
        elapsed,
        1e-3,
        {
            f"durations {durations} within 0.02 of (0.64, 1.24, 0.12)": dur_ok,
            f"proportions {proportions} within 0.005 of (0.32, 0.62, 0.06)": prop_ok,
        },
    )


def test_criterion_02_phonetization_reference(lexicon):
    expected = ["j", "En", "c", "j", "En", "c", "7", "x", "UN", "N", r"r\'", "1"]
    syllables = ["yan", "jian", "de", "hong", "ri"]
    t0 = time.perf_counter()
    got = phonetize(syllables, lexicon)
    elapsed = time.perf_counter() - t0
    _criterion(2, "phonetization-reference", elapsed, 1e-3, {f"{got} == expected": got == expected})


def test_criterion_03_oracle_equivalence():
    worst = 0.0
    occ_mismatches = 0
    t0 = time.perf_counter()
    for trial in range(200):
        rng = np.random.default_rng(30_000 + trial)
        T = int(rng.integers(2, 21))
        N = int(rng.integers(1, min(4, T) + 1))
        path = random_duration_path(rng, T, N, P=6, zero_pmf_frac=0.3)
        obs = random_posterior_obs(rng, T, 6)
        a = hsmm_viterbi(obs, path)
        b = lm.brute_force_decode(obs, path)
        if math.isinf(a.log_posterior) or math.isinf(b.log_posterior):
            same = math.isinf(a.log_posterior) and math.isinf(b.log_posterior)
            worst = worst if same else math.inf
        else:
            worst = max(worst, abs(a.log_posterior - b.log_posterior))
        if a.occupancies != b.occupancies:
            occ_mismatches += 1
    elapsed = time.perf_counter() - t0
    _criterion(
        3,
        "oracle-equivalence-200",
        elapsed,
        10.0,
        {
            f"max score diff {worst:.2e} < 1e-9": worst < 1e-9,
            f"occupancy mismatches {occ_mismatches} == 0": occ_mismatches == 0,
        },
    )


def test_criterion_04_geometric_equivalence():
    worst = 0.0
    occ_mismatches = 0
    t0 = time.perf_counter()
    for trial in range(100):
        rng = np.random.default_rng(40_000 + trial)
        T = int(rng.integers(2, 31))
        N = int(rng.integers(1, min(5, T) + 1))
        path = geometric_path(rng, T, N, P=6)
        obs = random_posterior_obs(rng, T, 6)
        a = hmm_viterbi(obs, path)
        b = hsmm_viterbi(obs, path)
        if math.isinf(a.log_posterior) or math.isinf(b.log_posterior):
            same = math.isinf(a.log_posterior) and math.isinf(b.log_posterior)
            worst = worst if same else math.inf
            continue
        worst = max(worst, abs(a.log_posterior - b.log_posterior))
        if a.occupancies != b.occupancies:
            occ_mismatches += 1
    elapsed = time.perf_counter() - t0
    _criterion(
        4,
        "geometric-equivalence-100",
        elapsed,
        10.0,
        {
            f"max score diff {worst:.2e} < 1e-6": worst < 1e-6,
            f"occupancy mismatches {occ_mismatches} == 0": occ_mismatches == 0,
        },
    )


def test_criterion_05_shift_invariance(inventory):
    c = 3.7
    network = MatchingNetwork(
        random_network(inventory, n_paths=20, seed=50_001, twin_pairs=4).paths
    )
    queries = make_labeled_queries(
        network, inventory, 2, gamma_gen=0.1, noise_temp=0.5, seed=50_002
    )
    checks = {}
    t0 = time.perf_counter()
    for mode in ("hsmm", "hmm", "hmm_post"):
        for query_id, obs, _ in queries:
            base, _ = rank_candidates(obs, network, mode, 0.1, 1.0, inventory)
            shifted, _ = rank_candidates(obs.shifted(c), network, mode, 0.1, 1.0, inventory)
            by_id = {cand.phrase_id: cand for cand in base}
            tol = 1e-6 * obs.n_frames
            delta_ok = all(
                abs((s.log_score - by_id[s.phrase_id].log_score) - obs.n_frames * c) <= tol
                for s in shifted
            )
            order_ok = [(x.phrase_id, x.rank) for x in base] == [
                (x.phrase_id, x.rank) for x in shifted
            ]
            checks[f"{mode}/{query_id} score shift == T*c"] = delta_ok
            checks[f"{mode}/{query_id} ranking identical"] = order_ok
    elapsed = time.perf_counter() - t0
    _criterion(5, "shift-invariance", elapsed, 5.0, checks)


def test_criterion_06_synthetic_retrieval_benchmark(benchmark):
    mrr_hsmm = benchmark["report_hsmm"].mrr
    mrr_hmm = benchmark["report_hmm"].mrr
    _criterion(
        6,
        "synthetic-retrieval-benchmark",
        benchmark["elapsed_match"],
        60.0,
        {
            f"MRR(hsmm) {mrr_hsmm:.4f} >= 0.9": mrr_hsmm >= 0.9,
            f"MRR(hsmm) {mrr_hsmm:.4f} >= MRR(hmm) {mrr_hmm:.4f}": mrr_hsmm >= mrr_hmm,
        },
    )


def test_criterion_07_post_processor_contract(benchmark):
    report_hmm = benchmark["report_hmm"]
    t0 = time.perf_counter()
    identical = True
    for query in report_hmm.queries:
        outcomes = benchmark["hmm_outcomes"][query.query_id]
        rescored = sorted(
            ((p.phrase_id, post_processor_rescore(out, p, 0.0)) for p, out in outcomes),
            key=lambda it: (-it[1], it[0]),
        )
        got = [(pid, rank) for rank, (pid, _) in enumerate(rescored, start=1)]
        want = [(cand.phrase_id, cand.rank) for cand in query.candidates]
        if got != want:
            identical = False
            break
    # constructed contrast: same path and baseline score, occupancies on the
    # duration means versus pushed away from them
    some_path = benchmark["hmm_outcomes"][report_hmm.queries[0].query_id][0][0]
    on_mean = tuple(max(1, round(d.mu_s / d.hop_s)) for _, d in some_path.states)
    off_mean = tuple(u + 3 for u in on_mean)
    base = -50.0
    s_on = post_processor_rescore(lm.DecodeOutcome("c", on_mean, base), some_path, 1.0)
    s_off = post_processor_rescore(lm.DecodeOutcome("c", off_mean, base), some_path, 1.0)
    elapsed = time.perf_counter() - t0
    _criterion(
        7,
        "post-processor-contract",
        elapsed,
        5.0,
        {
            "alpha=0 ranking identical to hmm baseline": identical,
            f"alpha=1 penalizes off-mean occupancies ({s_off:.2f} < {s_on:.2f})": s_off < s_on,
        },
    )


def test_criterion_08_metrics():
    t0 = time.perf_counter()
    exact = mrr([1, 2, 4]) == 7 / 12
    rng = np.random.default_rng(80_000)
    monotone = True
    for _ in range(1000):
        ranks = list(rng.integers(1, 40, size=int(rng.integers(1, 25))))
        values = [top_m_hit(ranks, m) for m in range(1, 41)]
        if any(a > b for a, b in zip(values, values[1:])):
            monotone = False
            break
    elapsed = time.perf_counter() - t0
    _criterion(
        8,
        "retrieval-metrics",
        elapsed,
        1.0,
        {"mrr([1,2,4]) == 7/12 exactly": exact, "top_m_hit monotone in M": monotone},
    )


def test_criterion_09_gmm_suite(tmp_path):
    t0 = time.perf_counter()
    rng = np.random.default_rng(90_000)
    centers = [(-4.0, 0.0), (4.0, 0.0), (0.0, 5.0)]
    train = {
        f"cls{i}": FeatureMatrix(rng.normal(c, 0.3, size=(200, 2)), 0.01)
        for i, c in enumerate(centers)
    }
    frames = np.vstack([fm.values for fm in train.values()])
    _, _, _, history = em_fit_diagonal(frames, 3, 60, np.random.default_rng(90_001))
    monotone = all(b >= a - 1e-8 for a, b in zip(history, history[1:]))

    model = fit_gmm_em(train, components=2, max_iters=50, seed=90_002)
    eval_rows, labels = [], []
    for i, c in enumerate(centers):
        eval_rows.append(rng.normal(c, 0.3, size=(120, 2)))
        labels.extend([i] * 120)
    accuracy = frame_accuracy(posteriorize(FeatureMatrix(np.vstack(eval_rows), 0.01), model), labels)

    model.to_file(tmp_path / "model.gmm")
    again = GmmModel.from_file(tmp_path / "model.gmm")
    round_trip = (
        again.classes == model.classes
        and np.array_equal(again.priors, model.priors)
        and np.array_equal(again.weights, model.weights)
        and np.array_equal(again.means, model.means)
        and np.array_equal(again.variances, model.variances)
    )
    elapsed = time.perf_counter() - t0
    _criterion(
        9,
        "gmm-suite",
        elapsed,
        30.0,
        {
            "EM log-likelihood non-decreasing (1e-8 slack)": monotone,
            f"frame accuracy {accuracy:.3f} >= 0.95": accuracy >= 0.95,
            "model serialization round-trips bit-exact": round_trip,
        },
    )


def test_criterion_10_grid_search_recovers_generation_gamma(inventory):
    network = random_network(
        inventory, n_paths=30, seed=515, min_states=4, max_states=10, twin_pairs=10
    )
    rng = np.random.default_rng(616)
    twin_ids = [p.phrase_id for p in network.paths if p.phrase_id.endswith("twin")]
    pool = twin_ids + [t[:-4] for t in twin_ids] + [p.phrase_id for p in network.paths]
    truths = [pool[int(i)] for i in rng.integers(0, len(pool), 24)]
    queries = make_labeled_queries(
        network, inventory, 24, gamma_gen=0.1, noise_temp=0.7, seed=616, truth_ids=truths
    )
    dev = [(obs, truth) for _, obs, truth in queries]
    t0 = time.perf_counter()
    result = grid_search(
        dev, network, "hsmm", inventory, DEFAULT_ALPHA_GRID, DEFAULT_GAMMA_GRID
    )
    elapsed = time.perf_counter() - t0
    step = 0.1
    _criterion(
        10,
        "grid-search-gamma-recovery",
        elapsed,
        300.0,
        {
            f"argmax gamma {result.best.gamma} within one step of 0.1": abs(
                result.best.gamma - 0.1
            )
            <= step + 1e-9,
            f"grid evaluated fully ({len(result.points)} points)": len(result.points)
            == len(DEFAULT_ALPHA_GRID) * len(DEFAULT_GAMMA_GRID),
        },
    )
