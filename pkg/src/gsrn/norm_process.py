"""Norm-process realizations and pathwise norm evaluation.

A norm path is piecewise linear, starts at 0, has segment slopes in [0, 1]
that never decrease (so the path is convex), and is defined on [0, horizon]
with horizon >= 1. Each path parametrizes one realization of a random norm
on the sorted nonnegative quadrant: the norm of v = (v1, v2) with
v1 >= v2 >= 0 is the unique root p of v1/p + X(v2/p) = 1, which always lies
in [max(v), v1 + v2].
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .ctmc import RewardFunction, Trajectory

DEFAULT_NORM_TOL = 1e-12


@dataclass(frozen=True)
class NormPath:
    """Piecewise-linear convex path X with X(0) = 0.

    slopes[i] applies on [breakpoints[i], breakpoints[i+1]) and slopes[-1]
    up to the horizon.
    """

    breakpoints: np.ndarray
    slopes: np.ndarray
    horizon: float

    def __post_init__(self):
        bp = np.asarray(self.breakpoints, dtype=float)
        sl = np.asarray(self.slopes, dtype=float)
        if bp.size != sl.size:
            raise ValueError("need one slope per breakpoint")
        if bp.size == 0 or bp[0] != 0.0:
            raise ValueError("breakpoints must start at 0")
        if np.any(np.diff(bp) <= 0) or bp[-1] >= self.horizon:
            raise ValueError("breakpoints must increase strictly inside [0, horizon)")
        if np.any(sl < 0) or np.any(sl > 1):
            raise ValueError("slopes must lie in [0, 1]")
        if np.any(np.diff(sl) < 0):
            raise ValueError("slopes must be nondecreasing (convexity)")
        # cumulative value of X at each breakpoint
        seg = np.diff(np.append(bp, self.horizon))
        cum = np.concatenate([[0.0], np.cumsum(sl * seg)[:-1]])
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "slopes", sl)
        object.__setattr__(self, "_cum", cum)

    def value(self, t) -> np.ndarray | float:
        """X(t), exact piecewise-linear evaluation; t may be an array."""
        t_arr = np.asarray(t, dtype=float)
        if np.any(t_arr < 0) or np.any(t_arr > self.horizon):
            raise ValueError(f"t outside [0, {self.horizon}]")
        i = np.clip(np.searchsorted(self.breakpoints, t_arr, side="right") - 1,
                    0, self.breakpoints.size - 1)
        out = self._cum[i] + self.slopes[i] * (t_arr - self.breakpoints[i])
        return out if t_arr.shape else float(out)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["breakpoint", "slope"])
            for b, s in zip(self.breakpoints, self.slopes):
                w.writerow([repr(float(b)), repr(float(s))])


@dataclass(frozen=True)
class GsrnSample:
    """A sampled random norm: a path plus the root-solve tolerance used."""

    path: NormPath
    tol: float = DEFAULT_NORM_TOL

    def norm(self, v) -> float:
        """Norm of an arbitrary real/complex vector of dimension 2, via the
        reduction to sorted absolute values."""
        w = np.sort(np.abs(np.asarray(v)))[::-1]
        return evaluate_norm(self.path, (w[0], w[1]), self.tol)


def from_trajectory(traj: Trajectory, f: RewardFunction) -> NormPath:
    """Norm path whose slope on each constancy interval of the chain is the
    reward of the occupied state."""
    if not f.is_monotone:
        raise ValueError("reward must be nondecreasing in the state index")
    slopes = f.values[traj.states]
    if np.any(np.diff(slopes) < 0):
        raise ValueError("trajectory induces decreasing slopes (non-convex path)")
    # merge consecutive equal slopes so breakpoints stay strict
    keep = np.concatenate([[True], np.diff(slopes) > 0])
    bp = np.concatenate([[0.0], traj.jump_times])[keep]
    return NormPath(bp, slopes[keep], traj.horizon)


def path_integral(path: NormPath, t: float) -> float:
    """X(t) = integral of the slope step function over [0, t]."""
    if not 0 <= t <= path.horizon:
        raise ValueError(f"t={t} beyond path horizon {path.horizon}")
    return float(path.value(t))


def hitting_time_integral(traj: Trajectory, f: RewardFunction, t: float) -> float:
    """Occupation-time functional written through hitting times: the average
    over levels k in {0..n-1} of (t - tau_k+)_+ where tau_k+ is the first
    time the chain strictly exceeds k.

    Requires a pure-birth trajectory and the linear reward f(k) = k/n.
    """
    n = f.values.size - 1
    if not traj.is_pure_birth():
        raise ValueError("hitting-time form requires a pure-birth trajectory")
    if not np.allclose(f.values, np.arange(n + 1) / n, atol=0, rtol=0):
        raise ValueError("hitting-time form requires f(k) = k/n")
    if not 0 <= t <= traj.horizon:
        raise ValueError(f"t={t} beyond horizon {traj.horizon}")
    y0 = traj.initial_state
    total = 0.0
    for level in range(n):
        if level < y0:
            tau = 0.0  # already above the level at time zero
        else:
            j = level - y0  # jump index that enters state level+1
            tau = traj.jump_times[j] if j < traj.jump_times.size else np.inf
        total += max(t - tau, 0.0)
    return total / n


def evaluate_norm(path: NormPath, v, tol: float | None = None) -> float:
    """Unique p with v1/p + X(v2/p) = 1 for sorted v1 >= v2 >= 0.

    Bisection on [max(v), v1+v2]; the map is continuous and strictly
    decreasing there, so the bracket is valid. Returns 0 for v = (0, 0).
    """
    v1, v2 = float(v[0]), float(v[1])
    if v1 < 0 or v2 < 0 or v1 < v2:
        raise ValueError("v must satisfy v1 >= v2 >= 0")
    if v1 == 0.0:
        return 0.0
    if path.horizon < 1:
        raise ValueError("path horizon must be >= 1")
    if tol is None:
        tol = DEFAULT_NORM_TOL * (v1 + v2)
    if v2 == 0.0:
        return v1  # normalization convention
    lo, hi = v1, v1 + v2

    def resid(p):
        return v1 / p + path.value(v2 / p) - 1.0

    p = 0.5 * (lo + hi)
    for _ in range(200):
        r = resid(p)
        if abs(r) <= tol:
            return p
        if r > 0:
            lo = p
        else:
            hi = p
        p = 0.5 * (lo + hi)
    return p


@dataclass
class AxiomReport:
    """Violation lists from a norm-axiom sweep (empty lists mean a pass)."""

    definiteness: list = field(default_factory=list)
    homogeneity: list = field(default_factory=list)
    subadditivity: list = field(default_factory=list)
    bounds: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not (self.definiteness or self.homogeneity
                    or self.subadditivity or self.bounds)

    @property
    def violation_count(self) -> int:
        return (len(self.definiteness) + len(self.homogeneity)
                + len(self.subadditivity) + len(self.bounds))


def validate_norm_axioms(path: NormPath, test_vectors, tol: float = 1e-8,
                         alphas=(0.5, 2.0, 10.0)) -> AxiomReport:
    """Check definiteness, positive homogeneity, subadditivity and the
    max-norm/1-norm bracket on a list of sorted nonnegative pairs."""
    if len(test_vectors) == 0:
        raise ValueError("test vector set must be nonempty")
    report = AxiomReport()
    vecs = [(float(v[0]), float(v[1])) for v in test_vectors]
    ps = {}
    for v in vecs:
        p = evaluate_norm(path, v)
        ps[v] = p
        if (v == (0.0, 0.0)) != (p == 0.0):
            report.definiteness.append((v, p))
        if not (max(v) - tol <= p <= v[0] + v[1] + tol):
            report.bounds.append((v, p))
        for a in alphas:
            av = (a * v[0], a * v[1])
            if abs(evaluate_norm(path, av) - a * p) > tol * max(a, 1.0):
                report.homogeneity.append((v, a))
    for v in vecs:
        for w in vecs:
            s = np.sort([v[0] + w[0], v[1] + w[1]])[::-1]
            if evaluate_norm(path, s) > ps[v] + ps[w] + tol:
                report.subadditivity.append((v, w))
    return report
