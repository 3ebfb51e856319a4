"""AP position estimation from paired SNR/position samples.

The serving AP's position (in the client's coordinate frame) is the minimizer
of a pairwise ranking cross-entropy: the probability that sample j outranks
sample k under the SNR ratio r_j/(r_j+r_k) is matched against the probability
d_k/(d_k+d_j) induced by squared distances to a candidate position. The loss
is minimized by gradient descent with backtracking; an exhaustive grid search
provides an independent cross-check.

SNR enters in linear scale (positive by construction); squared Euclidean
distance is used for the distance ranking, not plain distance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegeneratePair, InsufficientSamples, NonFinite
from .geometry import Vec3

PROB_EPS = 1e-12
ALL_PAIRS_MAX_SAMPLES = 200
RANDOM_PAIRS_PER_SAMPLE = 20


def db_to_linear(snr_db):
    return np.power(10.0, np.asarray(snr_db, dtype=float) / 10.0)


class SampleSet:
    """Paired (SNR sample, client position) observations."""

    def __init__(self, positions, snr_linear):
        self.positions = np.asarray(positions, dtype=float).reshape(-1, 3)
        self.r = np.asarray(snr_linear, dtype=float).reshape(-1)
        if len(self.positions) != len(self.r):
            raise ValueError("positions and SNR samples must have equal length")
        if len(self.r) < 2:
            raise InsufficientSamples(f"need at least 2 samples, got {len(self.r)}")
        if not np.all(np.isfinite(self.positions)):
            raise ValueError("sample positions must be finite")
        if not np.all(self.r > 0.0):
            raise ValueError("SNR samples must be positive in linear scale")

    @classmethod
    def from_db(cls, positions, snr_db, scale: str = "linear") -> "SampleSet":
        """Build from dB samples; scale 'linear' converts via 10^(dB/10),
        'db' keeps raw dB values (only valid while they stay positive)."""
        if scale == "linear":
            return cls(positions, db_to_linear(snr_db))
        if scale == "db":
            return cls(positions, np.asarray(snr_db, dtype=float))
        raise ValueError(f"unknown snr scale {scale!r}")

    def __len__(self) -> int:
        return len(self.r)

    def distinct_positions(self) -> int:
        return len(np.unique(np.round(self.positions, 12), axis=0))


@dataclass(frozen=True)
class EstimatorConfig:
    learning_rate: float = 0.05
    max_iters: int = 5000
    grad_tol: float = 1e-7
    init: Vec3 | None = None            # default: sample centroid at ceiling height
    ceiling_height_m: float = 3.0
    pair_strategy: str = "auto"         # auto | all | random
    pair_seed: int = 0
    snr_scale: str = "linear"           # linear | db

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.pair_strategy not in ("auto", "all", "random"):
            raise ValueError(f"unknown pair_strategy {self.pair_strategy!r}")


def pair_prob_snr(r_j: float, r_k: float) -> float:
    """Probability that sample j outranks sample k by SNR: r_j / (r_j + r_k)."""
    total = r_j + r_k
    if total <= 0.0:
        raise DegeneratePair("both SNR samples are zero")
    return r_j / total

def pair_prob_dist(p_a: Vec3, q_j: Vec3, q_k: Vec3) -> float:
    """Probability that j outranks k by distance, via squared distances:
    d_k / (d_k + d_j) with d = ||p_a - q||^2."""
    dj = (p_a - q_j).dot(p_a - q_j)
    dk = (p_a - q_k).dot(p_a - q_k)
    if dj + dk <= 0.0:
        raise DegeneratePair("both positions coincide with the candidate AP")
    return dk / (dk + dj)


def make_pairs(n: int, strategy: str = "auto", seed: int = 0):
    """Index pairs (j, k) feeding the ranking loss.

    'all' uses every j<k pair; 'random' draws 20 pairs per sample without
    replacement; 'auto' switches from all-pairs to random above 200 samples.
    """
    if n < 2:
        raise InsufficientSamples("pair construction needs >= 2 samples")
    n_all = n * (n - 1) // 2
    if strategy == "all" or (strategy == "auto" and n <= ALL_PAIRS_MAX_SAMPLES):
        return np.triu_indices(n, k=1)
    m = min(n_all, RANDOM_PAIRS_PER_SAMPLE * n)
    from .seeding import substream
    flat = np.sort(substream(seed, 0x9A125).choice(n_all, size=m, replace=False))
    # decode flat upper-triangle index to (j, k), j < k
    j = (n - 2 - np.floor(
        np.sqrt(-8.0 * flat + 4.0 * n * (n - 1) - 7.0) / 2.0 - 0.5)).astype(np.int64)
    k = (flat + j + 1 - (n * (n - 1) // 2) + ((n - j) * (n - j - 1)) // 2).astype(np.int64)
    return j, k


def _loss_terms(p: np.ndarray, samples: SampleSet, pairs):
    j, k = pairs
    diff = samples.positions - p                       # (n, 3)
    d = np.einsum("ij,ij->i", diff, diff)              # squared distances
    dj, dk = d[j], d[k]
    total = dj + dk
    if np.any(total <= 0.0):
        raise DegeneratePair("a sample pair coincides with the candidate AP")
    pd = dk / total
    pr = samples.r[j] / (samples.r[j] + samples.r[k])
    return d, dj, dk, pd, np.clip(pr, PROB_EPS, 1.0 - PROB_EPS)


def rank_loss(p_a: Vec3, samples: SampleSet, pairs=None) -> float:
    """Mean ranking cross-entropy of the candidate AP position."""
    if pairs is None:
        pairs = make_pairs(len(samples))
    p = np.array(p_a.as_tuple())
    _, _, _, pd, pr = _loss_terms(p, samples, pairs)
    pdc = np.clip(pd, PROB_EPS, 1.0 - PROB_EPS)
    return float(-np.mean(pr * np.log(pdc) + (1.0 - pr) * np.log1p(-pdc)))


def rank_loss_gradient(p_a: Vec3, samples: SampleSet, pairs=None) -> Vec3:
    """Analytic gradient of rank_loss with respect to the candidate position."""
    if pairs is None:
        pairs = make_pairs(len(samples))
    p = np.array(p_a.as_tuple())
    g = _gradient(p, samples, pairs)
    return Vec3(*g)


def _gradient(p: np.ndarray, samples: SampleSet, pairs) -> np.ndarray:
    j, k = pairs
    _, dj, dk, pd, pr = _loss_terms(p, samples, pairs)
    inside = (pd > PROB_EPS) & (pd < 1.0 - PROB_EPS)   # clipped pairs are locally flat
    pdc = np.clip(pd, PROB_EPS, 1.0 - PROB_EPS)
    dldpd = np.where(inside, -(pr / pdc - (1.0 - pr) / (1.0 - pdc)), 0.0)
    ddj = 2.0 * (p - samples.positions[j])             # (P, 3)
    ddk = 2.0 * (p - samples.positions[k])
    denom = (dj + dk) ** 2
    dpd = (dj[:, None] * ddk - dk[:, None] * ddj) / denom[:, None]
    return (dldpd[:, None] * dpd).mean(axis=0)


def _loss_np(p: np.ndarray, samples: SampleSet, pairs) -> float:
    _, _, _, pd, pr = _loss_terms(p, samples, pairs)
    pdc = np.clip(pd, PROB_EPS, 1.0 - PROB_EPS)
    return float(-np.mean(pr * np.log(pdc) + (1.0 - pr) * np.log1p(-pdc)))


@dataclass(frozen=True)
class EstimateResult:
    position: Vec3
    loss: float
    n_iter: int
    grad_norm: float
    converged: bool


def estimate_ap_position(samples: SampleSet, cfg: EstimatorConfig = EstimatorConfig(),
                         pairs=None) -> EstimateResult:
    """Gradient descent on the ranking loss from the configured init.

    The step size backtracks (halves) whenever a step would increase the
    loss, so the loss sequence is non-increasing; it grows mildly after
    successful steps to speed up flat regions.
    """
    if samples.distinct_positions() < 2:
        raise InsufficientSamples("samples must span at least 2 distinct positions")
    if pairs is None:
        pairs = make_pairs(len(samples), cfg.pair_strategy, cfg.pair_seed)
    if cfg.init is not None:
        p = np.array(cfg.init.as_tuple())
    else:
        cx, cy = samples.positions[:, 0].mean(), samples.positions[:, 1].mean()
        p = np.array([cx, cy, cfg.ceiling_height_m])

    lr = cfg.learning_rate
    loss = _loss_np(p, samples, pairs)
    g = _gradient(p, samples, pairs)
    it = 0
    for it in range(1, cfg.max_iters + 1):
        gn = float(np.linalg.norm(g))
        if gn < cfg.grad_tol:
            return EstimateResult(Vec3(*p), loss, it - 1, gn, True)
        stepped = False
        while lr >= 1e-15:
            cand = p - lr * g
            cand_loss = _loss_np(cand, samples, pairs)
            if not math.isfinite(cand_loss) or not np.all(np.isfinite(cand)):
                raise NonFinite("descent iterate diverged; lower the learning rate")
            if cand_loss <= loss:
                p, loss = cand, cand_loss
                g = _gradient(p, samples, pairs)
                lr *= 1.5
                stepped = True
                break
            lr *= 0.5
        if not stepped:   # numerically pinned at a minimum
            break
    gn = float(np.linalg.norm(g))
    return EstimateResult(Vec3(*p), loss, it, gn, gn < cfg.grad_tol)


def grid_search_oracle(samples: SampleSet, bounds, resolution: float,
                       pairs=None) -> Vec3:
    """Exhaustive rank_loss minimization over a box grid: argmin cell center.

    bounds is ((x0, x1), (y0, y1), (z0, z1)); cells have the given edge
    length. Independent of the gradient path by construction.
    """
    if resolution <= 0:
        raise ValueError("resolution must be > 0")
    if pairs is None:
        pairs = make_pairs(len(samples))
    axes = []
    for lo, hi in bounds:
        if hi < lo:
            raise ValueError("bounds must be non-empty")
        n = max(1, int(math.ceil((hi - lo) / resolution - 1e-12)))
        axes.append(lo + resolution * (np.arange(n) + 0.5))
    gx, gy, gz = np.meshgrid(*axes, indexing="ij")
    centers = np.stack([gx.ravel(), gy.ravel(), gz.ravel()], axis=1)

    j, k = pairs
    n_pairs = len(j)
    chunk = max(1, int(4_000_000 // max(1, n_pairs)))
    best_loss, best_idx = math.inf, 0
    rj = samples.r[j]
    pr = np.clip(rj / (rj + samples.r[k]), PROB_EPS, 1.0 - PROB_EPS)
    for lo_i in range(0, len(centers), chunk):
        block = centers[lo_i:lo_i + chunk]             # (C, 3)
        diff = block[:, None, :] - samples.positions[None, :, :]
        d = np.einsum("cij,cij->ci", diff, diff)       # (C, n)
        dj, dk = d[:, j], d[:, k]
        pd = np.clip(dk / (dj + dk), PROB_EPS, 1.0 - PROB_EPS)
        losses = -np.mean(pr * np.log(pd) + (1.0 - pr) * np.log1p(-pd), axis=1)
        li = int(np.argmin(losses))
        if losses[li] < best_loss:
            best_loss, best_idx = float(losses[li]), lo_i + li
    return Vec3(*centers[best_idx])
