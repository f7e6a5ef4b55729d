"""Synthetic networks and labeled query sets for benchmarks and tests.

Defaults for duration scales follow the reference corpus statistics (voiced
phonemes average roughly 0.6 s for dan and 0.4 s for laosheng singing);
benchmark paths draw per-state means from a band around those values.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .acoustic import synth_query
from .decode import ObservationMatrix
from .durations import discretize_duration
from .network import DecodablePath, LyricPath, MatchingNetwork
from .score import PhonemeInventory


def random_network(
    inventory: PhonemeInventory,
    n_paths: int,
    seed: int,
    min_states: int = 5,
    max_states: int = 20,
    mu_range: tuple[float, float] = (0.12, 0.4),
    twin_pairs: int = 0,
) -> MatchingNetwork:
    """Random left-to-right paths over the inventory.

    ``twin_pairs`` of the paths are duration twins: same phoneme sequence as a
    base path but with state durations reversed, so only duration modeling can
    separate them from their sibling.
    """
    if twin_pairs * 2 > n_paths:
        raise ValueError("twin_pairs too large for n_paths")
    rng = np.random.default_rng(seed)
    labels = list(inventory.labels)
    paths = []
    n_base = n_paths - twin_pairs
    for i in range(n_base):
        n_states = int(rng.integers(min_states, max_states + 1))
        phones = rng.choice(len(labels), size=n_states)
        mus = rng.uniform(mu_range[0], mu_range[1], size=n_states)
        states = tuple((labels[p], float(m)) for p, m in zip(phones, mus))
        role = "dan" if i % 2 == 0 else "laosheng"
        paths.append(LyricPath(f"p{i:04d}", role, states))
    for k in range(twin_pairs):
        base = paths[k]
        mus = [mu for _, mu in base.states]
        twin_states = tuple(
            (label, mus[len(mus) - 1 - i]) for i, (label, _) in enumerate(base.states)
        )
        paths.append(LyricPath(f"{base.phrase_id}twin", base.role_type, twin_states))
    return MatchingNetwork(tuple(paths))


def decodable_from_lyric_path(
    path: LyricPath, inventory: PhonemeInventory, gamma: float, hop_s: float
) -> DecodablePath:
    """Instantiate a single path at its own natural duration (no rescaling)."""
    states = tuple(
        (inventory.index(label), discretize_duration(mu, gamma, hop_s))
        for label, mu in path.states
    )
    return DecodablePath(path.phrase_id, states, len(inventory))


def make_labeled_queries(
    network: MatchingNetwork,
    inventory: PhonemeInventory,
    n_queries: int,
    gamma_gen: float,
    noise_temp: float,
    seed: int,
    hop_s: float = 0.01,
    truth_ids: Sequence[str] | None = None,
    at_mode: bool = False,
) -> list[tuple[str, ObservationMatrix, str]]:
    """Generate (query_id, posteriorgram, truth phrase_id) triples.

    Ground-truth paths are sampled uniformly (or taken from ``truth_ids``);
    occupancies are drawn from duration distributions built with ``gamma_gen``.
    """
    rng = np.random.default_rng(seed)
    if truth_ids is None:
        pick = rng.integers(0, network.K, size=n_queries)
        truth_ids = [network.paths[int(i)].phrase_id for i in pick]
    elif len(truth_ids) != n_queries:
        raise ValueError("truth_ids length must equal n_queries")
    queries = []
    for qi, truth in enumerate(truth_ids):
        dec = decodable_from_lyric_path(network.path(truth), inventory, gamma_gen, hop_s)
        obs, _ = synth_query(dec, noise_temp, seed=int(rng.integers(2**31)), at_mode=at_mode)
        queries.append((f"q{qi:04d}", obs, truth))
    return queries
