"""Finite-state continuous-time Markov chains: generators, transition
matrices and trajectory sampling.

States are dense integer indices 0..size-1. A state is treated as absorbing
when its diagonal rate is >= -ABSORBING_TOL, which avoids dividing by a
near-zero holding rate.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

ROW_SUM_TOL = 1e-12
ABSORBING_TOL = 1e-14


@dataclass(frozen=True)
class GeneratorMatrix:
    """Infinitesimal generator of a finite-state CTMC (rates in 1/time)."""

    entries: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.entries, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"generator must be square, got shape {a.shape}")
        off = a - np.diag(np.diag(a))
        if np.any(off < -ROW_SUM_TOL):
            raise ValueError("off-diagonal rates must be nonnegative")
        rowsums = a.sum(axis=1)
        if np.any(np.abs(rowsums) > ROW_SUM_TOL * max(1.0, np.abs(a).max())):
            raise ValueError(f"rows must sum to zero, got {rowsums}")
        object.__setattr__(self, "entries", a)

    @property
    def size(self) -> int:
        return self.entries.shape[0]

    def is_absorbing(self, state: int) -> bool:
        return self.entries[state, state] >= -ABSORBING_TOL

    def to_json(self) -> str:
        return json.dumps({"size": self.size, "rows": self.entries.tolist()})

    @classmethod
    def from_json(cls, text: str) -> "GeneratorMatrix":
        obj = json.loads(text)
        a = np.array(obj["rows"], dtype=float)
        if a.shape != (obj["size"], obj["size"]):
            raise ValueError("generator JSON size field does not match rows")
        return cls(a)


@dataclass(frozen=True)
class Trajectory:
    """One chain realization on [0, horizon]: jump times and visited states."""

    initial_state: int
    jump_times: np.ndarray
    states: np.ndarray  # len(jump_times) + 1, states[0] == initial_state
    horizon: float

    def __post_init__(self):
        jt = np.asarray(self.jump_times, dtype=float)
        st = np.asarray(self.states, dtype=int)
        if st.size != jt.size + 1:
            raise ValueError("need one more state than jump times")
        if st[0] != self.initial_state:
            raise ValueError("states[0] must equal initial_state")
        if jt.size:
            if np.any(np.diff(jt) <= 0) or jt[0] <= 0 or jt[-1] > self.horizon:
                raise ValueError("jump times must be strictly increasing in (0, horizon]")
            if np.any(np.diff(st) == 0):
                raise ValueError("a jump must change the state")
        object.__setattr__(self, "jump_times", jt)
        object.__setattr__(self, "states", st)

    def state_at(self, t: float) -> int:
        """State occupied at time t (right-continuous)."""
        if not 0 <= t <= self.horizon:
            raise ValueError(f"t={t} outside [0, {self.horizon}]")
        return int(self.states[np.searchsorted(self.jump_times, t, side="right")])

    def is_pure_birth(self) -> bool:
        return bool(np.all(np.diff(self.states) == 1))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["jump_time", "new_state"])
            w.writerow([0.0, self.initial_state])
            for t, s in zip(self.jump_times, self.states[1:]):
                w.writerow([repr(float(t)), int(s)])

    @classmethod
    def from_csv(cls, path, horizon: float) -> "Trajectory":
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        times = [float(r["jump_time"]) for r in rows]
        states = [int(r["new_state"]) for r in rows]
        return cls(states[0], np.array(times[1:]), np.array(states), horizon)


@dataclass(frozen=True)
class RewardFunction:
    """Per-state slope values in [0, 1] (dimensionless)."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or v.size == 0:
            raise ValueError("values must be a nonempty vector")
        if np.any(v < 0) or np.any(v > 1):
            raise ValueError("slope values must lie in [0, 1]")
        object.__setattr__(self, "values", v)

    @classmethod
    def linear(cls, n: int) -> "RewardFunction":
        """f(k) = k/n on states 0..n."""
        return cls(np.arange(n + 1) / n)

    @property
    def is_monotone(self) -> bool:
        return bool(np.all(np.diff(self.values) >= 0))


def build_pure_birth(n: int, lam: float) -> GeneratorMatrix:
    """Pure-birth generator on states {0..n}: rate lam for k -> k+1, state n
    absorbing."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    g = np.zeros((n + 1, n + 1))
    idx = np.arange(n)
    g[idx, idx] = -lam
    g[idx, idx + 1] = lam
    return GeneratorMatrix(g)


def transition_matrix(G: GeneratorMatrix, t: float) -> np.ndarray:
    """P(t) = exp(t G), entries clamped to [0, 1]."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    if t == 0:
        return np.eye(G.size)
    p = expm(t * G.entries)
    if np.any(p < -1e-12) or np.any(p > 1 + 1e-12):
        raise RuntimeError("transition matrix entries escaped [0,1] beyond tolerance")
    return np.clip(p, 0.0, 1.0)


def matrix_exponential_action(A: np.ndarray, v: np.ndarray) -> np.ndarray:
    """exp(A) @ v for a square (possibly complex) matrix A."""
    A = np.asarray(A)
    v = np.asarray(v)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("A must be square")
    if v.shape[0] != A.shape[0]:
        raise ValueError(f"shape mismatch: A is {A.shape}, v has length {v.shape[0]}")
    return expm(A) @ v


def sample_trajectory(G: GeneratorMatrix, y0: int, horizon: float,
                      rng_seed: int) -> Trajectory:
    """Simulate one trajectory: exponential holding times with rate -G[k,k],
    successor drawn proportionally to the off-diagonal row."""
    if not 0 <= y0 < G.size:
        raise ValueError(f"invalid initial state {y0}")
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    rng = np.random.default_rng(rng_seed)
    g = G.entries
    t = 0.0
    state = y0
    jump_times = []
    states = [y0]
    while True:
        if G.is_absorbing(state):
            break
        rate = -g[state, state]
        t += rng.exponential(1.0 / rate)
        if t >= horizon:
            break
        row = g[state].copy()
        row[state] = 0.0
        probs = row / rate
        state = int(rng.choice(G.size, p=probs))
        jump_times.append(t)
        states.append(state)
    return Trajectory(y0, np.array(jump_times), np.array(states), horizon)


def sample_pure_birth_jump_times(n: int, lam: float, y0: int, count: int,
                                 seed: int) -> np.ndarray:
    """Vectorized batch sampler for the pure-birth chain.

    Returns an array of shape (count, n - y0): cumulative jump times; column j
    is the time the chain enters state y0 + j + 1. Entries may exceed any
    horizon of interest; callers clip as needed.
    """
    if n < 1 or not 0 <= y0 <= n:
        raise ValueError("invalid n or y0")
    rng = np.random.default_rng(seed)
    k = n - y0
    if k == 0 or lam == 0:
        return np.full((count, k), np.inf) if lam == 0 and k else np.empty((count, k))
    return np.cumsum(rng.exponential(1.0 / lam, size=(count, k)), axis=1)
