import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dirfsim.errors import DegeneratePair, InsufficientSamples
from dirfsim.geometry import Vec3
from dirfsim.ranking import (EstimatorConfig, SampleSet, estimate_ap_position,
                             grid_search_oracle, make_pairs, pair_prob_dist,
                             pair_prob_snr, rank_loss, rank_loss_gradient)

TRUE_AP = Vec3(4.0, 3.0, 2.5)


def synth_walk(n=110, seed=0, sigma_db=0.0, exponent=2.0, ap=TRUE_AP, box=4.5):
    """Wandering client at z=1 plus SNR from the log-distance formula.

    The generator is the oracle: samples follow snr = 72.3 - 10*n*log10(d)
    with iid shadowing, so with exponent 2 the squared-distance ranking model
    is exact and the argmin sits at the true AP.
    """
    rng = np.random.default_rng(seed)
    pos = rng.uniform(0.5, box, size=2)
    heading = rng.uniform(0, 2 * math.pi)
    pts = []
    for _ in range(n):
        heading += rng.normal(0, 0.35)
        cand = pos + 0.14 * np.array([math.cos(heading), math.sin(heading)])
        if not (0.5 <= cand[0] <= box and 0.5 <= cand[1] <= box):
            heading += math.pi / 2
            cand = pos
        pos = cand
        pts.append([pos[0], pos[1], 1.0])
    pts = np.array(pts)
    d = np.linalg.norm(pts - np.array(ap.as_tuple()), axis=1)
    snr_db = 72.3 - 10.0 * exponent * np.log10(d) + rng.normal(0, sigma_db, n)
    return SampleSet.from_db(pts, snr_db)


# -- pairwise probabilities ------------------------------------------------------

def test_pair_prob_snr_symmetry():
    assert pair_prob_snr(2.0, 2.0) == 0.5


def test_pair_prob_snr_direct():
    assert pair_prob_snr(3.0, 1.0) == 0.75


def test_pair_prob_snr_degenerate():
    with pytest.raises(DegeneratePair):
        pair_prob_snr(0.0, 0.0)


@settings(max_examples=200, deadline=None)
@given(a=st.floats(1e-6, 1e6), b=st.floats(1e-6, 1e6))
def test_pair_prob_snr_complement(a, b):
    assert pair_prob_snr(a, b) + pair_prob_snr(b, a) == pytest.approx(1.0, abs=1e-12)


def test_pair_prob_dist_equidistant():
    p = pair_prob_dist(Vec3(0, 0, 0), Vec3(1, 1, 0), Vec3(-1, 1, 0))
    assert p == 0.5


def test_pair_prob_dist_direct():
    # squared distances: d_j = 1, d_k = 4 -> 4/5
    p = pair_prob_dist(Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(2, 0, 0))
    assert p == pytest.approx(0.8)


def test_pair_prob_dist_closer_sample_ranks_higher(rng):
    for _ in range(100):
        pa = Vec3(*rng.uniform(-5, 5, 3))
        qj = Vec3(*rng.uniform(-5, 5, 3))
        qk = Vec3(*rng.uniform(-5, 5, 3))
        dj, dk = pa.distance_to(qj), pa.distance_to(qk)
        if abs(dj - dk) < 1e-9:
            continue
        p = pair_prob_dist(pa, qj, qk)
        assert (p > 0.5) == (dj < dk)


@settings(max_examples=100, deadline=None)
@given(coords=st.lists(st.floats(-5, 5), min_size=9, max_size=9))
def test_pair_prob_dist_complement(coords):
    pa, qj, qk = (Vec3(*coords[0:3]), Vec3(*coords[3:6]), Vec3(*coords[6:9]))
    if (pa - qj).norm() < 1e-6 and (pa - qk).norm() < 1e-6:
        return
    assert pair_prob_dist(pa, qj, qk) + pair_prob_dist(pa, qk, qj) == pytest.approx(1.0)


def test_pair_prob_dist_degenerate():
    p = Vec3(1, 2, 3)
    with pytest.raises(DegeneratePair):
        pair_prob_dist(p, p, p)


# -- rank_loss --------------------------------------------------------------------

def test_single_max_entropy_pair_gives_ln2():
    samples = SampleSet([[1, 0, 0], [-1, 0, 0]], [7.0, 7.0])
    loss = rank_loss(Vec3(0, 0, 1), samples)
    assert loss == pytest.approx(math.log(2.0), abs=1e-12)


def test_rank_loss_three_sample_scalar_oracle():
    # independent scalar-arithmetic evaluation of all three pair terms
    positions = [(0.0, 0.0, 0.0), (2.0, 0.0, 0.0), (0.0, 3.0, 0.0)]
    r = [5.0, 2.0, 1.0]
    p = (1.0, 1.0, 1.0)
    samples = SampleSet(positions, r)

    def sq(a, b):
        return sum((x - y) ** 2 for x, y in zip(a, b))

    d = [sq(p, q) for q in positions]
    expected = 0.0
    pairs = [(0, 1), (0, 2), (1, 2)]
    for j, k in pairs:
        pr = r[j] / (r[j] + r[k])
        pd = d[k] / (d[k] + d[j])
        expected += -(pr * math.log(pd) + (1 - pr) * math.log(1 - pd))
    expected /= len(pairs)
    assert rank_loss(Vec3(*p), samples) == pytest.approx(expected, abs=1e-9)


def test_loss_lower_at_truth_than_far_away():
    samples = synth_walk(seed=3)
    near = rank_loss(TRUE_AP, samples)
    far = rank_loss(TRUE_AP + Vec3(5, 0, 0), samples)
    assert near < far


def test_rank_loss_nonnegative(rng):
    samples = synth_walk(seed=4, sigma_db=3.0)
    for _ in range(20):
        p = Vec3(*rng.uniform(-3, 8, 3))
        assert rank_loss(p, samples) >= 0.0


def test_scale_invariance_of_snr_units():
    samples = synth_walk(seed=5, sigma_db=2.0)
    scaled = SampleSet(samples.positions, samples.r * 37.5)
    for p in (TRUE_AP, Vec3(0, 0, 0), Vec3(2, 5, 1)):
        assert rank_loss(p, samples) == pytest.approx(rank_loss(p, scaled), abs=1e-12)


# -- gradient ----------------------------------------------------------------------

def test_gradient_zero_by_symmetry():
    # two samples mirrored about x=0 with equal SNR: the x-gradient vanishes
    samples = SampleSet([[1, 0, 0], [-1, 0, 0]], [3.0, 3.0])
    g = rank_loss_gradient(Vec3(0.0, 0.7, 1.3), samples)
    assert abs(g.x) < 1e-12


def fd_gradient(p, samples, pairs, h=1e-5):
    g = []
    for axis in range(3):
        dv = [0.0, 0.0, 0.0]
        dv[axis] = h
        up = rank_loss(p + Vec3(*dv), samples, pairs)
        dn = rank_loss(p - Vec3(*dv), samples, pairs)
        g.append((up - dn) / (2 * h))
    return np.array(g)


def test_gradient_matches_central_differences(rng):
    samples = synth_walk(n=40, seed=6, sigma_db=2.0)
    pairs = make_pairs(len(samples))
    for _ in range(50):
        p = Vec3(*rng.uniform([0, 0, 0.5], [6, 6, 4]))
        g = np.array(rank_loss_gradient(p, samples, pairs).as_tuple())
        fd = fd_gradient(p, samples, pairs)
        assert np.linalg.norm(g - fd) <= 1e-6 * max(np.linalg.norm(fd), 1e-12)


def test_gradient_small_at_grid_minimizer():
    samples = synth_walk(seed=7)
    coarse = grid_search_oracle(samples, ((2, 6), (1, 5), (1.5, 3.5)), 0.05)
    fine = grid_search_oracle(
        samples,
        ((coarse.x - 0.05, coarse.x + 0.05),
         (coarse.y - 0.05, coarse.y + 0.05),
         (coarse.z - 0.05, coarse.z + 0.05)), 0.001)
    g = rank_loss_gradient(fine, samples)
    assert g.norm() < 1e-3


# -- gradient descent ----------------------------------------------------------------

def test_estimate_noiseless_recovers_truth():
    samples = synth_walk(seed=8)   # 15.3 m of path at 10 Hz
    result = estimate_ap_position(samples, EstimatorConfig())
    assert result.position.distance_to(TRUE_AP) < 0.1


def test_estimate_requires_distinct_positions():
    samples = SampleSet([[1, 1, 1], [1, 1, 1]], [2.0, 3.0])
    with pytest.raises(InsufficientSamples):
        estimate_ap_position(samples)


def test_descent_loss_non_increasing():
    samples = synth_walk(seed=9, sigma_db=2.0)
    pairs = make_pairs(len(samples))
    cfg = EstimatorConfig(max_iters=400)
    # re-run the descent manually, checking monotonicity of accepted steps
    from dirfsim.ranking import _gradient, _loss_np
    p = np.array([samples.positions[:, 0].mean(), samples.positions[:, 1].mean(), 3.0])
    lr, losses = cfg.learning_rate, [_loss_np(p, samples, pairs)]
    for _ in range(200):
        g = _gradient(p, samples, pairs)
        while True:
            cand = p - lr * g
            cand_loss = _loss_np(cand, samples, pairs)
            if cand_loss <= losses[-1] or lr < 1e-15:
                p = cand
                losses.append(cand_loss)
                lr *= 1.5
                break
            lr *= 0.5
    assert all(b <= a + 1e-15 for a, b in zip(losses, losses[1:]))


def test_estimate_matches_grid_search():
    samples = synth_walk(seed=10)
    est = estimate_ap_position(samples).position
    grid = grid_search_oracle(samples, ((2, 6), (1, 5), (1.5, 3.5)), 0.1)
    assert est.distance_to(grid) < 0.1


def test_estimate_with_explicit_init():
    samples = synth_walk(seed=11)
    result = estimate_ap_position(samples, EstimatorConfig(init=Vec3(4.2, 2.8, 2.0)))
    assert result.position.distance_to(TRUE_AP) < 0.1


# -- grid search oracle ---------------------------------------------------------------

def test_grid_single_cell_returns_center():
    samples = synth_walk(n=20, seed=12)
    out = grid_search_oracle(samples, ((4, 5), (2, 3), (2, 3)), 1.0)
    assert out == Vec3(4.5, 2.5, 2.5)


def test_grid_beats_random_probes(rng):
    samples = synth_walk(n=60, seed=13, sigma_db=2.0)
    bounds = ((1, 7), (0, 6), (1, 4))
    best = grid_search_oracle(samples, bounds, 0.25)
    best_loss = rank_loss(best, samples)
    for _ in range(100):
        probe = Vec3(*(rng.uniform(*b) for b in bounds))
        assert best_loss <= rank_loss(probe, samples) + 0.01  # within one cell's slack


def test_grid_translation_covariance():
    samples = synth_walk(n=60, seed=14, sigma_db=1.0)
    delta = np.array([2.0, -1.0, 0.5])
    shifted = SampleSet(samples.positions + delta, samples.r)
    bounds = ((2, 6), (1, 5), (1.5, 3.5))
    sbounds = tuple((lo + d, hi + d) for (lo, hi), d in zip(bounds, delta))
    a = grid_search_oracle(samples, bounds, 0.1)
    b = grid_search_oracle(shifted, sbounds, 0.1)
    moved = Vec3(a.x + delta[0], a.y + delta[1], a.z + delta[2])
    assert b.distance_to(moved) < 0.1 * math.sqrt(3) + 1e-9


# -- pair construction ----------------------------------------------------------------

def test_all_pairs_below_threshold():
    j, k = make_pairs(50)
    assert len(j) == 50 * 49 // 2
    assert np.all(j < k)


def test_random_pairs_above_threshold():
    j, k = make_pairs(300)
    assert len(j) == 20 * 300
    assert np.all(j < k) and np.all(k < 300)
    j2, k2 = make_pairs(300)
    assert np.array_equal(j, j2) and np.array_equal(k, k2)


def test_triangular_decode_matches_triu():
    # the flat-index decode must agree with numpy's enumeration
    n = 13
    full_j, full_k = np.triu_indices(n, k=1)
    j, k = make_pairs(n, strategy="all")
    assert np.array_equal(j, full_j) and np.array_equal(k, full_k)
    jr, kr = make_pairs(n, strategy="random")
    pairs = set(zip(jr.tolist(), kr.tolist()))
    assert pairs <= set(zip(full_j.tolist(), full_k.tolist()))


def test_sample_set_validation():
    with pytest.raises(InsufficientSamples):
        SampleSet([[0, 0, 0]], [1.0])
    with pytest.raises(ValueError, match="positive"):
        SampleSet([[0, 0, 0], [1, 0, 0]], [1.0, -2.0])
    with pytest.raises(ValueError, match="equal length"):
        SampleSet([[0, 0, 0], [1, 0, 0]], [1.0])


def test_db_scale_switch():
    pts = [[0, 0, 0], [1, 0, 0]]
    lin = SampleSet.from_db(pts, [10.0, 20.0], scale="linear")
    assert lin.r == pytest.approx([10.0, 100.0])
    raw = SampleSet.from_db(pts, [10.0, 20.0], scale="db")
    assert raw.r == pytest.approx([10.0, 20.0])
