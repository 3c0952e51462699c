"""Deterministic invariant battery behind the `validate` CLI command.

Each check returns a CheckResult; the battery is pure given the seed and
the scale, so two runs with the same arguments produce identical reports.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from . import ctmc, distribution as dist, expected_norm as en, norm_process as npr


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str


@dataclass
class ValidationReport:
    seed: int
    quick: bool
    checks: list

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_json(self) -> str:
        return json.dumps({"seed": self.seed, "quick": self.quick,
                           "passed": self.ok,
                           "checks": [asdict(c) for c in self.checks]},
                          indent=2, sort_keys=True)


def _check(checks, name, passed, detail=""):
    checks.append(CheckResult(name, bool(passed), detail))


def run_validation(seed: int = 0, quick: bool = False) -> ValidationReport:
    checks: list = []
    rng = np.random.default_rng(seed)
    n_paths = 100 if quick else 1000
    n_samples = 10_000 if quick else 100_000

    # chain algebra: semigroup and stochastic rows
    G = ctmc.build_pure_birth(5, 3.0)
    worst = 0.0
    for t in (0.1, 0.5, 1.0):
        P = ctmc.transition_matrix(G, t)
        worst = max(worst, float(np.abs(P.sum(axis=1) - 1).max()))
        for s in (0.2, 0.7):
            gap = np.abs(ctmc.transition_matrix(G, s) @ P
                         - ctmc.transition_matrix(G, s + t)).max()
            worst = max(worst, float(gap))
    _check(checks, "ctmc.semigroup_and_stochastic_rows", worst <= 1e-9,
           f"max deviation {worst:.2e}")

    # sampled trajectories vs the transition matrix at t=1
    G10 = ctmc.build_pure_birth(10, 10.0)
    f10 = ctmc.RewardFunction.linear(10)
    counts = np.zeros(11)
    m = n_samples // 10
    sub = rng.integers(0, 2**62)
    sub_rng = np.random.default_rng(int(sub))
    for _ in range(m):
        traj = ctmc.sample_trajectory(G10, 0, 1.0, int(sub_rng.integers(2**62)))
        counts[traj.state_at(1.0)] += 1
    emp = counts / m
    p_row = ctmc.transition_matrix(G10, 1.0)[0]
    tol = 4 * np.sqrt(np.maximum(p_row * (1 - p_row), 1e-12) / m)
    gap = np.abs(emp - p_row)
    _check(checks, "ctmc.empirical_state_distribution", bool(np.all(gap <= tol)),
           f"max |emp-P| {gap.max():.4f} vs 4se {tol.max():.4f} ({m} samples)")

    # pathwise identity: hitting-time form equals the path integral
    worst = 0.0
    trials = n_paths
    for n in (1, 5, 10):
        Gn = ctmc.build_pure_birth(n, float(n))
        fn = ctmc.RewardFunction.linear(n)
        for _ in range(trials // 3):
            traj = ctmc.sample_trajectory(Gn, 0, 1.0, int(rng.integers(2**62)))
            path = npr.from_trajectory(traj, fn)
            t = float(rng.uniform(0, 1))
            worst = max(worst, abs(npr.hitting_time_integral(traj, fn, t)
                                   - npr.path_integral(path, t)))
    _check(checks, "norm_process.pathwise_identity", worst <= 1e-12,
           f"max gap {worst:.2e}")

    # norm axioms on sampled paths
    vec_count = 20 if quick else 100
    pairs = np.sort(rng.uniform(0, 1, size=(vec_count, 2)), axis=1)[:, ::-1]
    pairs[0] = (1.0, 0.0)
    violations = 0
    path_count = max(10, n_paths // 10)
    for _ in range(path_count):
        traj = ctmc.sample_trajectory(G10, 0, 1.0, int(rng.integers(2**62)))
        path = npr.from_trajectory(traj, f10)
        rep = npr.validate_norm_axioms(path, pairs, tol=1e-8)
        violations += rep.violation_count
    _check(checks, "norm_process.axiom_suite", violations == 0,
           f"{violations} violations on {path_count} paths x {vec_count} vectors")

    # distribution engines at reduced or figure-scale settings
    n, lam, N = (5, 5.0, 60) if quick else (10, 10.0, 200)
    Gd = ctmc.build_pure_birth(n, lam)
    fd = ctmc.RewardFunction.linear(n)
    up = dist.solve_upwind(Gd, fd, N)
    ie = dist.solve_integral_equation(n, lam, N)
    sup = float(np.abs(up.state_row(0) - ie.state_row(0)).max())
    _check(checks, "distribution.cross_engine_sup", sup <= 0.02,
           f"state-0 sup distance {sup:.4f} (n={n}, lambda={lam}, N={N})")

    mono = float(np.min(np.diff(up.values, axis=2)))
    _check(checks, "distribution.monotone_in_x", mono >= -1e-12,
           f"min x-increment {mono:.2e}")

    top = up.state_row(n)
    exact = (up.x_axis[None, :] >= up.t_axis[:, None] - 1e-15).astype(float)
    exact[:, 0] = 0.0
    _check(checks, "distribution.top_state_step", np.array_equal(top, exact),
           "closed-form absorbing row")

    rep = dist.check_remark_bounds(up, float(fd.values.min()), float(fd.values.max()))
    _check(checks, "distribution.remark_bounds", rep.ok,
           f"{rep.violations}/{rep.checked} violations, max excess {rep.max_excess:.2e}")

    probes = 5 if quick else 20
    ev = dist.CharFnEvaluator(Gd, fd)
    bad = 0
    xs_all = dist.sample_occupation_integrals(Gd, fd, 1.0, 0, 1, int(rng.integers(2**62)))
    for _ in range(probes):
        it = int(rng.integers(1, up.t_axis.size))
        ix = int(rng.integers(1, up.x_axis.size - 1))
        t, x = float(up.t_axis[it]), float(up.x_axis[ix])
        est = dist.monte_carlo_cdf(Gd, fd, t, x, 0, n_samples,
                                   int(rng.integers(2**62)))
        se = max(est.stderr, 1e-12)
        if abs(est.value - up.values[0, it, ix]) > 4 * se + 0.01:
            bad += 1
    _check(checks, "distribution.monte_carlo_probes", bad == 0,
           f"{bad}/{probes} probes outside 4 standard errors (+0.01 grid slack)")

    mean_gap = 0.0
    for t in (0.25, 0.5, 1.0):
        i = int(round(t / up.dt))
        mean_gap = max(mean_gap, abs(up.mean(up.t_axis[i], state=0)
                                     - dist.mean_via_generator(ev, up.t_axis[i], 0)))
    _check(checks, "distribution.moment_consistency", mean_gap <= 2 * up.dx,
           f"max |grid mean - semigroup mean| {mean_gap:.2e} vs 2dx {2 * up.dx:.2e}")

    # expected norm geometry
    sq = en.unit_circle(dist.solve_upwind(ctmc.build_pure_birth(1, 0.0),
                                          ctmc.RewardFunction.linear(1),
                                          400 if quick else 1000),
                        33)
    sq_gap = float(np.abs(np.max(np.abs(sq.points), axis=1) - 1).max())
    _check(checks, "expected_norm.max_norm_square", sq_gap <= 1e-2,
           f"max |q|_inf deviation from 1: {sq_gap:.2e}")

    vals = []
    for lam_i in (0.0, 1.0, 10.0, 100.0):
        g_i = dist.solve_upwind(ctmc.build_pure_birth(n, lam_i), fd, N,
                                store_states=(0,))
        vals.append(en.expected_norm_2d(g_i, en.SortedVector([1.0, 1.0])))
    _check(checks, "expected_norm.monotone_in_lambda",
           bool(np.all(np.diff(vals) >= -1e-9)),
           "E[p(1,1)] at lambda 0,1,10,100: "
           + ", ".join(f"{x:.4f}" for x in vals))

    inner = en.expected_norm_2d(up, en.SortedVector([0.8, 0.5]))
    flat = en.weak_extension(up, en.SortedVector([0.8, 0.5, 0.0]))
    _check(checks, "expected_norm.weak_restriction",
           abs(flat - inner) <= 1e-12,
           f"3-D restriction vs 2-D value gap {abs(flat - inner):.2e}")

    strong = en.strong_extension_samples_2d(n, lam, en.SortedVector([1.0, 1.0]),
                                            n_samples, int(rng.integers(2**62)))
    ref = en.expected_norm_2d(up, en.SortedVector([1.0, 1.0]))
    se = float(strong.std(ddof=1) / np.sqrt(strong.size))
    gap = abs(float(strong.mean()) - ref)
    _check(checks, "expected_norm.strong_vs_weak_mean",
           gap <= 4 * se + 2 * up.dx,
           f"|MC mean - quadrature| {gap:.4f} vs 4se+2dx {4 * se + 2 * up.dx:.4f}")

    return ValidationReport(seed=seed, quick=quick, checks=checks)
