"""Shared builders for decoder tests: random instances with known structure."""

import math

import numpy as np

from lyricmatch.decode import ObservationMatrix
from lyricmatch.durations import StateDurationDist, geometric_occupancy
from lyricmatch.network import DecodablePath

HOP = 0.01


def random_posterior_obs(rng, T, P, hop=HOP, zero_frac=0.0):
    """Random valid posterior rows; optionally zero out small entries."""
    post = rng.dirichlet(np.ones(P), size=T)
    if zero_frac > 0:
        post[post < zero_frac / P] = 0.0
        post /= post.sum(axis=1, keepdims=True)
    with np.errstate(divide="ignore"):
        logs = np.log(post)
    return ObservationMatrix(logs, hop)


def uniform_obs(T, P, hop=HOP):
    return ObservationMatrix(np.full((T, P), -math.log(P)), hop)


def random_duration_path(rng, T, N, P, hop=HOP, zero_pmf_frac=0.0, phrase_id="x"):
    """Random per-state pmfs over random supports, feasible for T frames."""
    caps = [int(rng.integers(1, T + 1)) for _ in range(N)]
    if sum(caps) < T:
        caps[-1] = min(T, caps[-1] + T - sum(caps))
    states = []
    for cap in caps:
        pmf = rng.dirichlet(np.ones(cap))
        if cap > 1 and zero_pmf_frac > 0 and rng.random() < zero_pmf_frac:
            pmf[int(rng.integers(0, cap))] = 0.0
            pmf /= pmf.sum()
        dist = StateDurationDist(
            mu_s=max(cap, 1) * hop * 0.5, gamma=0.1, hop_s=hop, pmf=pmf, M=cap
        )
        states.append((int(rng.integers(0, P)), dist))
    return DecodablePath(phrase_id, tuple(states), P)


def geometric_dist(mu_s, T, hop=HOP):
    """Truncated geometric occupancy for a state of mean duration mu_s.

    Truncation M is chosen so the tail mass is below 1e-9 (and at least T, so
    truncation never binds for a T-frame query); the pmf is left unnormalized,
    which the 1e-9 tail keeps within the distribution's own sum tolerance.
    """
    p = max(0.0, 1.0 - hop / mu_s)
    if p == 0.0:
        M = 1
    else:
        M = max(T, math.ceil(math.log(1e-9) / math.log(p)))
    pmf = np.array([geometric_occupancy(p, u) for u in range(1, M + 1)])
    return StateDurationDist(mu_s=mu_s, gamma=0.1, hop_s=hop, pmf=pmf, M=M)


def geometric_path(rng, T, N, P, hop=HOP, phrase_id="g"):
    """Path whose occupancy pmfs are the geometrics implied by random means."""
    mus = hop * rng.uniform(0.5, 12.0, size=N)
    mus[int(rng.integers(0, N))] = hop * rng.uniform(1.5, 12.0)  # ensure feasibility
    states = tuple(
        (int(rng.integers(0, P)), geometric_dist(float(mu), T, hop)) for mu in mus
    )
    return DecodablePath(phrase_id, states, P)
