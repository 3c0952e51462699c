"""Occupation-time CDF engines and the characteristic-function evaluator.

The n=1 chain has a closed-form law: X_t = (t - tau)_+ with tau exponential,
so F_0(t, x) = exp(-lam (t - x)) for 0 < x <= t and 1 for x > t. All three
engines are checked against it, and against each other at a reduced scale.
"""

import math

import numpy as np
import pytest
from scipy import stats

from gsrn import ctmc, distribution as dist


def closed_form_n1(lam, t_axis, x_axis):
    """Exact F_0 surface for the two-state chain with f = (0, 1)."""
    T, X = np.meshgrid(t_axis, x_axis, indexing="ij")
    F = np.where(X <= 0, 0.0, np.where(X >= T, 1.0, np.exp(-lam * (T - X))))
    F[:, -1] = 1.0
    return F


@pytest.fixture(scope="module")
def small_grids():
    """Upwind and integral-equation solves at a reduced scale."""
    n, lam, N = 5, 5.0, 60
    G = ctmc.build_pure_birth(n, lam)
    f = ctmc.RewardFunction.linear(n)
    return {
        "n": n, "lam": lam, "G": G, "f": f,
        "upwind": dist.solve_upwind(G, f, N),
        "integral": dist.solve_integral_equation(n, lam, N),
    }


class TestCharacteristicFunction:
    def test_u_zero_is_one(self):
        ev = dist.CharFnEvaluator(ctmc.build_pure_birth(4, 3.0),
                                  ctmc.RewardFunction.linear(4))
        assert dist.characteristic_function(ev, 0.7, 0.0, 0) == pytest.approx(1.0)

    def test_n1_closed_form(self):
        # E exp(iuX) = e^{-lam t} + lam (e^{iut} - e^{-lam t}) / (lam + iu)
        lam, t, u = 1.0, 1.0, 1.0
        ev = dist.CharFnEvaluator(ctmc.build_pure_birth(1, lam),
                                  ctmc.RewardFunction.linear(1))
        got = dist.characteristic_function(ev, t, u, 0)
        ref = (math.exp(-lam * t)
               + lam * (np.exp(1j * u * t) - math.exp(-lam * t)) / (lam + 1j * u))
        assert abs(got - ref) < 1e-12

    def test_modulus_bounded(self):
        ev = dist.CharFnEvaluator(ctmc.build_pure_birth(6, 8.0),
                                  ctmc.RewardFunction.linear(6))
        for u in (-20.0, -1.0, 3.0, 50.0):
            assert abs(dist.characteristic_function(ev, 1.0, u, 0)) <= 1 + 1e-10

    def test_matches_monte_carlo(self):
        lam = 2.0
        ev = dist.CharFnEvaluator(ctmc.build_pure_birth(3, lam),
                                  ctmc.RewardFunction.linear(3))
        xs = dist.sample_occupation_integrals(ctmc.build_pure_birth(3, lam),
                                              ctmc.RewardFunction.linear(3),
                                              1.0, 0, 200_000, 5)
        emp = np.mean(np.exp(1j * 2.0 * xs))
        se = 2.0 / np.sqrt(xs.size)  # crude bound on the complex-mean error
        assert abs(dist.characteristic_function(ev, 1.0, 2.0, 0) - emp) <= 4 * se

    def test_invalid_arguments(self):
        ev = dist.CharFnEvaluator(ctmc.build_pure_birth(2, 1.0),
                                  ctmc.RewardFunction.linear(2))
        with pytest.raises(ValueError):
            dist.characteristic_function(ev, -1.0, 0.0, 0)
        with pytest.raises(ValueError):
            dist.characteristic_function(ev, 1.0, 0.0, 5)


class TestMeanViaGenerator:
    def test_n1_closed_form(self):
        # E X_1 = int_0^1 (1 - e^{-s}) ds = 1/e
        ev = dist.CharFnEvaluator(ctmc.build_pure_birth(1, 1.0),
                                  ctmc.RewardFunction.linear(1))
        assert dist.mean_via_generator(ev, 1.0, 0) == pytest.approx(
            math.exp(-1.0), abs=1e-10)

    def test_zero_time(self):
        ev = dist.CharFnEvaluator(ctmc.build_pure_birth(2, 1.0),
                                  ctmc.RewardFunction.linear(2))
        assert dist.mean_via_generator(ev, 0.0, 0) == 0.0

    def test_charfn_derivative_consistency(self):
        # imaginary part of the central difference of phi at u=0 is the mean
        ev = dist.CharFnEvaluator(ctmc.build_pure_birth(4, 3.0),
                                  ctmc.RewardFunction.linear(4))
        h = 1e-5
        fd = (dist.characteristic_function(ev, 1.0, h, 0)
              - dist.characteristic_function(ev, 1.0, -h, 0)) / (2j * h)
        assert abs(fd.real - dist.mean_via_generator(ev, 1.0, 0)) < 1e-6


class TestSolveUpwind:
    def test_matches_n1_closed_form(self):
        lam = 2.0
        grid = dist.solve_upwind(ctmc.build_pure_birth(1, lam),
                                 ctmc.RewardFunction.linear(1), 200)
        exact = closed_form_n1(lam, grid.t_axis, grid.x_axis)
        assert np.abs(grid.state_row(0) - exact).max() < 0.01

    def test_shape_invariants(self, small_grids):
        grid = small_grids["upwind"]
        v = grid.values
        assert np.all(v >= 0) and np.all(v <= 1)
        assert np.min(np.diff(v, axis=2)) >= -1e-12  # nondecreasing in x
        assert np.all(v[:, :, 0] == 0.0)
        assert np.all(v[:, :, -1] == 1.0)
        assert np.all(v[:, 0, 1:] == 1.0)  # X_0 = 0 < x for every x > 0

    def test_absorbing_top_state_is_exact_step(self, small_grids):
        grid = small_grids["upwind"]
        top = grid.state_row(small_grids["n"])
        exact = (grid.x_axis[None, :] >= grid.t_axis[:, None] - 1e-15).astype(float)
        exact[:, 0] = 0.0
        assert np.array_equal(top, exact)

    def test_lambda_zero_is_exact_step_at_every_state(self):
        n = 4
        grid = dist.solve_upwind(ctmc.build_pure_birth(n, 0.0),
                                 ctmc.RewardFunction.linear(n), 50)
        for k in range(n + 1):
            speed = k / n
            exact = (grid.x_axis[None, :]
                     >= grid.t_axis[:, None] * speed - 1e-15).astype(float)
            exact[:, 0] = 0.0
            exact[:, -1] = 1.0
            assert np.array_equal(grid.state_row(k), exact)

    def test_cfl_violation_raises_with_admissible_bound(self):
        G = ctmc.build_pure_birth(2, 1.0)
        f = ctmc.RewardFunction.linear(2)
        with pytest.raises(ValueError, match="CFL"):
            dist.solve_upwind(G, f, 50, dt=0.1)

    def test_store_states_subset(self, small_grids):
        G, f = small_grids["G"], small_grids["f"]
        part = dist.solve_upwind(G, f, 60, store_states=(0,))
        assert part.states == (0,)
        assert np.array_equal(part.state_row(0), small_grids["upwind"].state_row(0))

    def test_sigma_smoothing_matches_normal_cdf_at_t0(self):
        sigma = 0.05
        grid = dist.solve_upwind(ctmc.build_pure_birth(1, 2.0),
                                 ctmc.RewardFunction.linear(1), 200, sigma=sigma)
        row0 = grid.state_row(0)[0]
        # initial data is a step just right of x=0; smoothing gives the
        # normal CDF centered on the half cell
        ref = stats.norm.cdf((grid.x_axis - grid.dx / 2) / sigma)
        assert np.abs(row0[1:-1] - ref[1:-1]).max() < 1e-3

    def test_sigma_preserves_shape_invariants(self):
        grid = dist.solve_upwind(ctmc.build_pure_birth(2, 2.0),
                                 ctmc.RewardFunction.linear(2), 80, sigma=0.02)
        assert np.all(grid.values >= 0) and np.all(grid.values <= 1)
        assert np.min(np.diff(grid.values, axis=2)) >= -1e-12

    def test_rejects_negative_sigma(self):
        with pytest.raises(ValueError):
            dist.solve_upwind(ctmc.build_pure_birth(1, 1.0),
                              ctmc.RewardFunction.linear(1), 50, sigma=-0.1)


class TestSolveIntegralEquation:
    def test_matches_n1_closed_form(self):
        lam = 2.0
        grid = dist.solve_integral_equation(1, lam, 200)
        exact = closed_form_n1(lam, grid.t_axis, grid.x_axis)
        assert np.abs(grid.state_row(0) - exact).max() < 0.01

    def test_cross_engine_agreement(self, small_grids):
        sup = np.abs(small_grids["upwind"].state_row(0)
                     - small_grids["integral"].state_row(0)).max()
        assert sup <= 0.02

    def test_default_axes_match_upwind(self, small_grids):
        up, ie = small_grids["upwind"], small_grids["integral"]
        assert np.array_equal(up.t_axis, ie.t_axis)
        assert np.array_equal(up.x_axis, ie.x_axis)

    def test_shape_invariants(self, small_grids):
        v = small_grids["integral"].values
        assert np.all(v >= 0) and np.all(v <= 1)
        assert np.min(np.diff(v, axis=2)) >= -1e-12

    def test_lambda_zero_reduces_to_steps(self):
        grid = dist.solve_integral_equation(3, 0.0, 40)
        ref = dist.solve_upwind(ctmc.build_pure_birth(3, 0.0),
                                ctmc.RewardFunction.linear(3), 40,
                                dt=grid.dt)
        assert np.abs(grid.values - ref.values).max() < 1e-12

    def test_invalid_arguments(self):
        with pytest.raises(ValueError):
            dist.solve_integral_equation(0, 1.0, 50)
        with pytest.raises(ValueError):
            dist.solve_integral_equation(3, -1.0, 50)


class TestMonteCarlo:
    def test_cdf_matches_n1_closed_form(self):
        lam, t, x = 2.0, 0.8, 0.3
        G = ctmc.build_pure_birth(1, lam)
        f = ctmc.RewardFunction.linear(1)
        est = dist.monte_carlo_cdf(G, f, t, x, 0, 100_000, 2)
        exact = math.exp(-lam * (t - x))
        assert abs(est.value - exact) <= 4 * est.stderr

    def test_grid_deterministic_given_seed(self):
        G = ctmc.build_pure_birth(3, 3.0)
        f = ctmc.RewardFunction.linear(3)
        a = dist.monte_carlo_grid(G, f, 20, 10, 0, 5000, 7)
        b = dist.monte_carlo_grid(G, f, 20, 10, 0, 5000, 7)
        assert np.array_equal(a.values, b.values)

    def test_grid_matches_n1_closed_form(self):
        # the empirical CDF at grid nodes carries no discretization error,
        # so the whole surface must sit within Monte Carlo noise of the
        # closed form (Kolmogorov-Smirnov-type uniform bound)
        lam, samples = 2.0, 200_000
        mc = dist.monte_carlo_grid(ctmc.build_pure_birth(1, lam),
                                   ctmc.RewardFunction.linear(1),
                                   40, 20, 0, samples, 3)
        exact = closed_form_n1(lam, mc.t_axis, mc.x_axis)
        assert np.abs(mc.values[0] - exact).max() <= 2.5 / np.sqrt(samples)

    def test_fast_path_matches_generic_sampler(self):
        # a non-uniform pure-birth chain forces the per-trajectory fallback;
        # compare its mean to the semigroup mean
        g = np.zeros((4, 4))
        rates = [1.0, 2.0, 3.0]
        for k, r in enumerate(rates):
            g[k, k] = -r
            g[k, k + 1] = r
        G = ctmc.GeneratorMatrix(g)
        f = ctmc.RewardFunction.linear(3)
        xs = dist.sample_occupation_integrals(G, f, 1.0, 0, 4000, 11)
        ev = dist.CharFnEvaluator(G, f)
        se = xs.std(ddof=1) / np.sqrt(xs.size)
        assert abs(xs.mean() - dist.mean_via_generator(ev, 1.0, 0)) <= 4 * se

    def test_uniform_chain_uses_closed_form_sampler(self):
        G = ctmc.build_pure_birth(5, 2.0)
        f = ctmc.RewardFunction.linear(5)
        xs = dist.sample_occupation_integrals(G, f, 1.0, 0, 1000, 0)
        assert xs.shape == (1000,)
        assert np.all(xs >= 0) and np.all(xs <= 1)

    def test_rejects_zero_samples(self):
        G = ctmc.build_pure_birth(2, 1.0)
        with pytest.raises(ValueError):
            dist.sample_occupation_integrals(G, ctmc.RewardFunction.linear(2),
                                             1.0, 0, 0, 0)


class TestDistributionGrid:
    def test_cdf_bilinear_interpolation(self, small_grids):
        grid = small_grids["upwind"]
        it, ix = 5, 7
        t, x = grid.t_axis[it], grid.x_axis[ix]
        assert grid.cdf(t, x) == pytest.approx(grid.values[0, it, ix])
        mid = grid.cdf(t + grid.dt / 2, x)
        lo, hi = grid.values[0, it, ix], grid.values[0, it + 1, ix]
        assert min(lo, hi) - 1e-12 <= mid <= max(lo, hi) + 1e-12

    def test_cdf_virtual_cells(self, small_grids):
        grid = small_grids["upwind"]
        assert grid.cdf(0.5, -0.2) == 0.0
        assert grid.cdf(0.5, 1.2) == 1.0

    def test_cdf_rejects_time_outside_range(self, small_grids):
        with pytest.raises(ValueError):
            small_grids["upwind"].cdf(2.0, 0.5)

    def test_mean_of_step_grid(self):
        grid = dist.solve_upwind(ctmc.build_pure_birth(1, 0.0),
                                 ctmc.RewardFunction.linear(1), 400)
        # state 1 moves at unit speed: X_t = t exactly
        t = grid.t_axis[len(grid.t_axis) // 2]
        assert grid.mean(t, state=1) == pytest.approx(t, abs=grid.dx)

    def test_rejects_probabilities_outside_unit_interval(self):
        t_axis = np.linspace(0, 1, 3)
        x_axis = np.linspace(0, 1, 4)
        bad = np.full((1, 3, 4), 1.5)
        with pytest.raises(ValueError):
            dist.DistributionGrid(t_axis, x_axis, bad, (0,), 0.0)

    def test_csv_long_form(self, small_grids, tmp_path):
        grid = small_grids["integral"]
        p = tmp_path / "grid.csv"
        grid.to_csv(p)
        lines = p.read_text().splitlines()
        assert lines[0] == "state,t,x,F"
        state, t, x, F = lines[-1].split(",")
        assert int(state) == grid.states[-1]
        assert float(t) == grid.t_axis[-1]
        assert float(x) == grid.x_axis[-1]
        assert float(F) == grid.values[-1, -1, -1]


class TestRemarkBounds:
    def test_holds_on_solved_grids(self, small_grids):
        f = small_grids["f"]
        m, M = float(f.values.min()), float(f.values.max())
        for key in ("upwind", "integral"):
            report = dist.check_remark_bounds(small_grids[key], m, M)
            assert report.ok, (key, report.violations, report.max_excess)

    def test_detects_violations(self, small_grids):
        grid = small_grids["upwind"]
        # reversing the time axis breaks the sandwich
        broken = dist.DistributionGrid(grid.t_axis, grid.x_axis,
                                       grid.values[:, ::-1, :], grid.states,
                                       0.0)
        report = dist.check_remark_bounds(broken, 0.0, 1.0)
        assert report.violations > 0
        assert report.max_excess > 0.01
