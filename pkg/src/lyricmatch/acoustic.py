"""Frame-level acoustic modeling over abstract feature vectors.

A diagonal-covariance mixture per phoneme class turns feature frames into a
posteriorgram. Feature extraction itself is out of scope; any upstream that
produces per-frame vectors (or a posteriorgram directly, via the file format)
plugs in unchanged. ``synth_query`` fabricates posteriorgrams with known state
occupancies for end-to-end tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .decode import ObservationMatrix
from .network import DecodablePath

VARIANCE_FLOOR = 1e-4
_EM_REL_TOL = 1e-6  # stop when per-frame log-likelihood gain drops below this


@dataclass(frozen=True, eq=False)
class FeatureMatrix:
    """T x D real-valued frame features with a fixed hop."""

    values: np.ndarray
    hop_s: float

    def __post_init__(self) -> None:
        arr = np.asarray(self.values, dtype=np.float64).copy()
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"values must be a T x D matrix with T,D >= 1, got {arr.shape}")
        if not np.isfinite(arr).all():
            raise ValueError("feature values must all be finite")
        if not self.hop_s > 0:
            raise ValueError(f"hop_s must be > 0, got {self.hop_s}")
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    @property
    def n_frames(self) -> int:
        return self.values.shape[0]

    @property
    def n_dims(self) -> int:
        return self.values.shape[1]

    def to_file(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"{self.n_frames} {self.n_dims} {repr(float(self.hop_s))}\n")
            np.savetxt(fh, self.values, fmt="%.17g")

    @classmethod
    def from_file(cls, path: str | Path) -> "FeatureMatrix":
        with open(path, encoding="utf-8") as fh:
            header = fh.readline().split()
            if len(header) != 3:
                raise ValueError(f"{path}: expected header 'T D hop_s', got {header}")
            t, d, hop = int(header[0]), int(header[1]), float(header[2])
            arr = np.loadtxt(fh, dtype=np.float64, ndmin=2)
        if arr.shape != (t, d):
            raise ValueError(f"{path}: header promises {(t, d)}, file has {arr.shape}")
        return cls(arr, hop)


@dataclass(frozen=True, eq=False)
class GmmModel:
    """Per-class diagonal-covariance mixtures plus class priors.

    Arrays are stacked over classes: weights (P, C), means (P, C, D),
    variances (P, C, D), priors (P,). Class order defines posteriorgram
    columns.
    """

    classes: tuple[str, ...]
    priors: np.ndarray
    weights: np.ndarray
    means: np.ndarray
    variances: np.ndarray

    def __post_init__(self) -> None:
        priors = np.asarray(self.priors, dtype=np.float64).copy()
        weights = np.asarray(self.weights, dtype=np.float64).copy()
        means = np.asarray(self.means, dtype=np.float64).copy()
        variances = np.asarray(self.variances, dtype=np.float64).copy()
        P = len(self.classes)
        if P < 1 or len(set(self.classes)) != P:
            raise ValueError("classes must be non-empty and unique")
        if priors.shape != (P,) or abs(priors.sum() - 1.0) > 1e-9 or np.any(priors < 0):
            raise ValueError("priors must be a simplex over the classes")
        if weights.ndim != 2 or weights.shape[0] != P:
            raise ValueError(f"weights must be (P, C), got {weights.shape}")
        if np.any(np.abs(weights.sum(axis=1) - 1.0) > 1e-9) or np.any(weights < 0):
            raise ValueError("each class's mixture weights must sum to 1")
        C = weights.shape[1]
        D = means.shape[-1]
        if means.shape != (P, C, D) or variances.shape != (P, C, D):
            raise ValueError("means and variances must be (P, C, D)")
        if np.any(variances < VARIANCE_FLOOR - 1e-12):
            raise ValueError(f"variances must be >= the floor {VARIANCE_FLOOR}")
        for arr in (priors, weights, means, variances):
            arr.flags.writeable = False
        object.__setattr__(self, "priors", priors)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "variances", variances)

    @property
    def n_classes(self) -> int:
        return len(self.classes)

    @property
    def n_components(self) -> int:
        return self.weights.shape[1]

    @property
    def n_dims(self) -> int:
        return self.means.shape[2]

    def to_file(self, path: str | Path) -> None:
        def fmt(x: float) -> str:
            return "%.17g" % x

        with open(path, "w", encoding="utf-8") as fh:
            fh.write("gmm-model v1\n")
            fh.write(f"dims {self.n_dims}\n")
            fh.write(f"components {self.n_components}\n")
            fh.write(f"classes {' '.join(self.classes)}\n")
            fh.write(f"priors {' '.join(fmt(p) for p in self.priors)}\n")
            for p, label in enumerate(self.classes):
                fh.write(f"class {label}\n")
                fh.write(f"weights {' '.join(fmt(w) for w in self.weights[p])}\n")
                for c in range(self.n_components):
                    fh.write(f"mean {' '.join(fmt(m) for m in self.means[p, c])}\n")
                    fh.write(f"var {' '.join(fmt(v) for v in self.variances[p, c])}\n")

    @classmethod
    def from_file(cls, path: str | Path) -> "GmmModel":
        with open(path, encoding="utf-8") as fh:
            lines = [ln.rstrip("\n") for ln in fh]
        if not lines or lines[0] != "gmm-model v1":
            raise ValueError(f"{path}: not a 'gmm-model v1' file")

        def field(i: int, key: str) -> list[str]:
            parts = lines[i].split()
            if not parts or parts[0] != key:
                raise ValueError(f"{path}:{i + 1}: expected '{key} ...', got {lines[i]!r}")
            return parts[1:]

        d = int(field(1, "dims")[0])
        c = int(field(2, "components")[0])
        classes = tuple(field(3, "classes"))
        priors = np.array([float(x) for x in field(4, "priors")])
        weights, means, variances = [], [], []
        i = 5
        for label in classes:
            got = field(i, "class")
            if got != [label]:
                raise ValueError(f"{path}:{i + 1}: expected class {label!r}, got {got}")
            weights.append([float(x) for x in field(i + 1, "weights")])
            cm, cv = [], []
            for k in range(c):
                cm.append([float(x) for x in field(i + 2 + 2 * k, "mean")])
                cv.append([float(x) for x in field(i + 3 + 2 * k, "var")])
            means.append(cm)
            variances.append(cv)
            i += 2 + 2 * c
        model = cls(classes, priors, np.array(weights), np.array(means), np.array(variances))
        if model.n_dims != d or model.n_components != c:
            raise ValueError(f"{path}: header/body dimension mismatch")
        return model


def _logsumexp(a: np.ndarray, axis: int) -> np.ndarray:
    amax = np.max(a, axis=axis, keepdims=True)
    amax = np.where(np.isfinite(amax), amax, 0.0)
    with np.errstate(divide="ignore"):
        out = np.log(np.exp(a - amax).sum(axis=axis)) + np.squeeze(amax, axis=axis)
    return out


def _component_log_likelihoods(
    frames: np.ndarray, weights: np.ndarray, means: np.ndarray, variances: np.ndarray
) -> np.ndarray:
    """(n, C) log of weight_c * N(x; mean_c, diag(var_c))."""
    d = frames.shape[1]
    const = -0.5 * d * math.log(2.0 * math.pi) - 0.5 * np.log(variances).sum(axis=1)
    diff = frames[:, None, :] - means[None, :, :]
    quad = 0.5 * (diff * diff / variances[None, :, :]).sum(axis=2)
    with np.errstate(divide="ignore"):
        logw = np.log(weights)
    return logw[None, :] + const[None, :] - quad


def _kmeans_pp_centers(frames: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """Seeded k-means++ center selection (init only, no Lloyd iterations)."""
    n = frames.shape[0]
    centers = np.empty((k, frames.shape[1]))
    centers[0] = frames[rng.integers(n)]
    d2 = ((frames - centers[0]) ** 2).sum(axis=1)
    for i in range(1, k):
        total = d2.sum()
        if total <= 0:
            centers[i] = frames[rng.integers(n)]
        else:
            centers[i] = frames[rng.choice(n, p=d2 / total)]
        d2 = np.minimum(d2, ((frames - centers[i]) ** 2).sum(axis=1))
    return centers


def em_fit_diagonal(
    frames: np.ndarray, n_components: int, max_iters: int, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray, np.ndarray, list[float]]:
    """EM for one diagonal-covariance mixture.

    Returns (weights, means, variances, per-iteration total log-likelihood).
    The history is evaluated before each update, so it is non-decreasing up to
    the variance floor.
    """
    frames = np.asarray(frames, dtype=np.float64)
    n = frames.shape[0]
    if n < n_components:
        raise ValueError(f"need at least {n_components} frames, got {n}")
    means = _kmeans_pp_centers(frames, n_components, rng)
    base_var = np.maximum(frames.var(axis=0), VARIANCE_FLOOR)
    variances = np.tile(base_var, (n_components, 1))
    weights = np.full(n_components, 1.0 / n_components)
    history: list[float] = []
    for _ in range(max_iters):
        comp_ll = _component_log_likelihoods(frames, weights, means, variances)
        frame_ll = _logsumexp(comp_ll, axis=1)
        ll = float(frame_ll.sum())
        history.append(ll)
        if len(history) > 1 and ll - history[-2] < _EM_REL_TOL * n:
            break
        resp = np.exp(comp_ll - frame_ll[:, None])
        mass = np.maximum(resp.sum(axis=0), 1e-300)
        weights = mass / mass.sum()
        means = (resp.T @ frames) / mass[:, None]
        second = (resp.T @ (frames * frames)) / mass[:, None]
        variances = np.maximum(second - means * means, VARIANCE_FLOOR)
    return weights, means, variances, history


def fit_gmm_em(
    features_by_class: Mapping[str, FeatureMatrix],
    components: int,
    max_iters: int = 100,
    seed: int = 0,
) -> GmmModel:
    """Train one mixture per phoneme class; priors are class frame proportions."""
    if not features_by_class:
        raise ValueError("features_by_class is empty")
    if components < 1:
        raise ValueError(f"components must be >= 1, got {components}")
    classes = tuple(features_by_class)
    counts = []
    weights, means, variances = [], [], []
    for i, label in enumerate(classes):
        frames = features_by_class[label].values
        if frames.shape[0] < components:
            raise ValueError(
                f"class {label!r} has {frames.shape[0]} frames, "
                f"fewer than {components} components"
            )
        rng = np.random.default_rng([seed, i])
        w, m, v, _ = em_fit_diagonal(frames, components, max_iters, rng)
        counts.append(frames.shape[0])
        weights.append(w)
        means.append(m)
        variances.append(v)
    priors = np.array(counts, dtype=np.float64)
    priors /= priors.sum()
    return GmmModel(classes, priors, np.stack(weights), np.stack(means), np.stack(variances))


def posteriorize(features: FeatureMatrix, model: GmmModel) -> ObservationMatrix:
    """Per-frame class posteriors (prior times mixture likelihood, normalized)."""
    if features.n_dims != model.n_dims:
        raise ValueError(
            f"features have {features.n_dims} dims, model expects {model.n_dims}"
        )
    T = features.n_frames
    scores = np.empty((T, model.n_classes))
    with np.errstate(divide="ignore"):
        log_priors = np.log(model.priors)
    for p in range(model.n_classes):
        comp_ll = _component_log_likelihoods(
            features.values, model.weights[p], model.means[p], model.variances[p]
        )
        scores[:, p] = log_priors[p] + _logsumexp(comp_ll, axis=1)
    log_post = scores - _logsumexp(scores, axis=1)[:, None]
    return ObservationMatrix(log_post, features.hop_s)


def frame_accuracy(obs: ObservationMatrix, labels: Sequence[int]) -> float:
    """Fraction of frames whose argmax class equals the label (ties: lowest index)."""
    if len(labels) != obs.n_frames:
        raise ValueError(f"{len(labels)} labels for {obs.n_frames} frames")
    pred = np.argmax(obs.log_probs, axis=1)
    return float(np.mean(pred == np.asarray(labels)))


def synth_query(
    path: DecodablePath, noise_temp: float, seed: int, at_mode: bool = False
) -> tuple[ObservationMatrix, tuple[int, ...]]:
    """Generate a posteriorgram from a path with known ground-truth occupancies.

    Occupancies are drawn from each state's duration pmf (or pinned to its
    mode with ``at_mode``). Each frame puts mass 1/(1 + noise_temp*(P-1)) on
    the true phoneme and a noise_temp-scaled uniform share on every other
    class, then a seeded multiplicative log-normal jitter
    (row *= exp(noise_temp * z), z ~ N(0,1)) is applied and the row
    renormalized. With noise_temp = 0 rows are exactly one-hot.
    """
    if noise_temp < 0:
        raise ValueError(f"noise_temp must be >= 0, got {noise_temp}")
    rng = np.random.default_rng(seed)
    P = path.n_classes
    occupancies = []
    for _, dist in path.states:
        if at_mode:
            occupancies.append(dist.mode)
        else:
            occupancies.append(int(rng.choice(dist.M, p=dist.pmf)) + 1)
    T = sum(occupancies)
    on = 1.0 / (1.0 + noise_temp * (P - 1))
    off = noise_temp * on
    rows = np.full((T, P), off)
    t = 0
    for (idx, _), u in zip(path.states, occupancies):
        rows[t : t + u, idx] = on
        t += u
    jitter = rng.standard_normal((T, P))
    rows = rows * np.exp(noise_temp * jitter)
    rows /= rows.sum(axis=1, keepdims=True)
    with np.errstate(divide="ignore"):
        log_rows = np.log(rows)
    return ObservationMatrix(log_rows, path.hop_s), tuple(occupancies)
