import numpy as np
import pytest

from halftest.distributions import MarginalSpec, sample_marginal
from halftest.oracle import brute_force_max_fourth_moment
from halftest.sos_hyper import (MomentLayout,
                                build_degree4_relaxation,
                                empirical_fourth_moment_tensor, moment_basis,
                                multiplicity, solve_relaxation,
                                sorted_multisets)
from halftest.testers import hypercontractivity_test


def test_tensor_single_point():
    t = empirical_fourth_moment_tensor(np.array([[1.0, 0.0]]))
    assert t.entry(0, 0, 0, 0) == 1.0
    assert t.entry(1, 1, 1, 1) == 0.0
    assert t.entry(0, 0, 1, 1) == 0.0


def test_tensor_three_points():
    pts = np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    t = empirical_fourth_moment_tensor(pts)
    assert abs(t.entry(0, 0, 0, 0) - 2.0 / 3.0) < 1e-15
    assert abs(t.entry(1, 1, 1, 1) - 1.0 / 3.0) < 1e-15
    assert t.entry(0, 1, 0, 1) == 0.0


def test_tensor_gaussian_moments():
    pts = sample_marginal(MarginalSpec("standard_gaussian", 2), 100_000, seed=21)
    t = empirical_fourth_moment_tensor(pts)
    assert abs(t.entry(0, 0, 0, 0) - 3.0) < 0.15
    assert abs(t.entry(0, 0, 1, 1) - 1.0) < 0.1


def test_tensor_permutation_symmetry():
    pts = sample_marginal(MarginalSpec("standard_gaussian", 3), 50, seed=22)
    t = empirical_fourth_moment_tensor(pts)
    dense = t.dense()
    assert np.allclose(dense, np.transpose(dense, (1, 0, 2, 3)))
    assert np.allclose(dense, np.transpose(dense, (3, 2, 1, 0)))
    assert np.allclose(dense, np.transpose(dense, (2, 3, 0, 1)))


def test_tensor_matches_sample_mean():
    pts = sample_marginal(MarginalSpec("standard_gaussian", 3), 40, seed=23)
    t = empirical_fourth_moment_tensor(pts)
    direct = np.mean(pts[:, 0] * pts[:, 1] ** 2 * pts[:, 2])
    assert abs(t.entry(0, 1, 1, 2) - direct) < 1e-15


def test_relaxation_dimension_one_collapse():
    pts = np.array([[2.0], [1.0], [-1.0]])
    t = empirical_fourth_moment_tensor(pts)
    value, pm, sol = solve_relaxation(t)
    assert sol.optimal
    assert abs(value - t.entry(0, 0, 0, 0)) < 1e-6


def test_relaxation_dominates_true_maximum():
    pts = np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    value, _, sol = solve_relaxation(empirical_fourth_moment_tensor(pts))
    assert sol.optimal
    assert value >= 2.0 / 3.0 - 1e-6


def test_relaxation_scaling():
    pts = sample_marginal(MarginalSpec("standard_gaussian", 3), 200, seed=24)
    t = empirical_fourth_moment_tensor(pts)
    base, _, _ = solve_relaxation(t)
    for s in (0.5, 4.0):
        scaled, _, _ = solve_relaxation(t.scaled(s))
        assert abs(scaled - s * base) <= 1e-5 * max(1.0, s * base)


def test_relaxation_rotation_invariance():
    rng = np.random.default_rng(25)
    pts = sample_marginal(MarginalSpec("standard_gaussian", 3), 300, seed=25)
    q, _ = np.linalg.qr(rng.standard_normal((3, 3)))
    a, _, _ = solve_relaxation(empirical_fourth_moment_tensor(pts))
    b, _, _ = solve_relaxation(empirical_fourth_moment_tensor(pts @ q.T))
    assert abs(a - b) <= 1e-5 * max(1.0, abs(a))


def test_problem_shape_and_constraint_kinds():
    t = empirical_fourth_moment_tensor(np.array([[1.0, 0.5], [0.0, 1.0]]))
    prob = build_degree4_relaxation(t)
    layout = MomentLayout(2)
    assert prob.n == layout.size == 1 + 2 + 3
    # normalization + consistency + one ideal row per basis monomial
    assert any(b == 1.0 for _, b in prob.constraints)
    assert sum(1 for _, b in prob.constraints if b == 0.0) >= layout.size


def test_pseudo_moment_matrix_invariants():
    pts = sample_marginal(MarginalSpec("standard_gaussian", 3), 500, seed=26)
    t = empirical_fourth_moment_tensor(pts)
    value, pm, sol = solve_relaxation(t)
    assert sol.optimal
    m = pm.matrix
    # psd within solver tolerance
    assert np.linalg.eigvalsh(m)[0] >= -1e-6
    # normalization
    assert abs(pm.expectation(()) - 1.0) <= 1e-6
    # moment consistency: E[v_i v_j] appears in two positions
    layout = pm.layout
    for i in range(3):
        for j in range(i, 3):
            a = m[layout.index[(i,)], layout.index[(j,)]]
            b = m[layout.index[()], layout.index[(i, j)]]
            assert abs(a - b) <= 1e-6
    # sphere ideal: sum_i E[v_i^2 m] = E[m] for every basis monomial
    for mono in layout.basis:
        total = sum(pm.expectation(tuple(sorted(mono + (i, i)))) for i in range(3))
        assert abs(total - pm.expectation(mono)) <= 1e-6
    # objective value consistency
    recomputed = sum(t.values[pos] * multiplicity(ms) * pm.expectation(ms)
                     for pos, ms in enumerate(sorted_multisets(3, 4)))
    assert abs(recomputed - value) <= 1e-6


@pytest.mark.parametrize("seed", range(8))
def test_relaxation_dominance_random(seed):
    rng = np.random.default_rng(100 + seed)
    d = int(rng.integers(2, 5))
    n = int(rng.integers(5, 200))
    pts = rng.standard_normal((n, d)) * rng.uniform(0.5, 2.0)
    brute, _ = brute_force_max_fourth_moment(pts, seed=seed)
    value, _, sol = solve_relaxation(empirical_fourth_moment_tensor(pts))
    assert sol.optimal
    assert value >= brute - 1e-5


def test_hypercontractivity_zeros_accept():
    verdict = hypercontractivity_test(np.zeros((10, 3)), gamma=1.0)
    assert verdict.accepted
    assert verdict.diagnostics["sdp_value"] <= 1e-7


def test_hypercontractivity_gaussian_accepts():
    pts = sample_marginal(MarginalSpec("standard_gaussian", 3), 10_000, seed=27)
    verdict = hypercontractivity_test(pts, gamma=1.0, c_hyper=10.0)
    assert verdict.accepted
    assert verdict.diagnostics["sdp_value"] < 4.0


def test_hypercontractivity_spike_rejects():
    pts = sample_marginal(MarginalSpec("standard_gaussian", 3), 10_000, seed=28)
    spiked = pts.copy()
    spiked[:100] = 0.0
    spiked[:100, 0] = 10.0
    verdict = hypercontractivity_test(spiked, gamma=1.0, c_hyper=10.0)
    assert not verdict.accepted
    assert verdict.diagnostics["sdp_value"] > 9.0


def test_moment_basis_size():
    for d in (1, 2, 5):
        assert len(moment_basis(d)) == 1 + d + d * (d + 1) // 2
