"""Expected norms, unit circles/spheres and higher-dimensional extensions.

The law of the random norm at a sorted pair v = (v1, v2) is read off the
solved occupation-time CDF: P(p(v) < y) = F_0(v2/y, 1 - v1/y), with both
arguments guaranteed to land in [0,1] for y inside [max(v), v1+v2].
Expected norms follow by tail integration over that bracket.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .ctmc import GeneratorMatrix, RewardFunction, sample_trajectory
from .distribution import DistributionGrid
from .norm_process import evaluate_norm, from_trajectory


@dataclass(frozen=True)
class SortedVector:
    """Nonnegative components in nonincreasing order (the canonical
    representative of a vector under gauge invariance and symmetry)."""

    components: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.components, dtype=float)
        if c.ndim != 1 or c.size == 0:
            raise ValueError("components must form a nonempty vector")
        if np.any(c < 0) or np.any(np.diff(c) > 0):
            raise ValueError("components must be nonnegative and nonincreasing")
        object.__setattr__(self, "components", c)

    @classmethod
    def reduce(cls, v) -> "SortedVector":
        """Canonical representative of an arbitrary real/complex vector."""
        return cls(np.sort(np.abs(np.asarray(v)))[::-1])

    @property
    def dim(self) -> int:
        return self.components.size

    @property
    def max_norm(self) -> float:
        return float(self.components[0])

    @property
    def one_norm(self) -> float:
        return float(self.components.sum())


@dataclass(frozen=True)
class ExpectedNormTable:
    """Tabulated expected norms over a direction mesh, plus the induced
    unit-ball boundary points directions/values."""

    dimension: int
    directions: np.ndarray  # (count, dimension), sorted representatives
    values: np.ndarray  # (count,)
    provenance: dict = field(default_factory=dict)
    faces: np.ndarray | None = None  # optional triangle indices (3-D meshes)

    def __post_init__(self):
        d = np.asarray(self.directions, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if d.shape != (v.size, self.dimension):
            raise ValueError("directions/values shape mismatch")
        object.__setattr__(self, "directions", d)
        object.__setattr__(self, "values", v)

    @property
    def points(self) -> np.ndarray:
        """Unit-ball boundary points: direction / expected norm."""
        return self.directions / self.values[:, None]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            comp = [f"v{i + 1}" for i in range(self.dimension)]
            w.writerow(comp + ["expected_norm"]
                       + [f"q{i + 1}" for i in range(self.dimension)])
            for d, val, q in zip(self.directions, self.values, self.points):
                w.writerow([repr(float(c)) for c in d] + [repr(float(val))]
                           + [repr(float(c)) for c in q])


def norm_cdf(grid: DistributionGrid, v: SortedVector, y) -> float | np.ndarray:
    """P(p(v) < y) for a 2-D sorted vector, via bilinear CDF lookup."""
    if v.dim != 2:
        raise ValueError("norm_cdf takes 2-dimensional vectors")
    if v.max_norm == 0:
        raise ValueError("v must be nonzero")
    y_arr = np.asarray(y, dtype=float)
    if np.any(y_arr < v.max_norm - 1e-12) or np.any(y_arr > v.one_norm + 1e-12):
        raise ValueError(
            f"y must lie in [{v.max_norm}, {v.one_norm}]")
    v1, v2 = v.components
    out = grid.cdf(np.clip(v2 / y_arr, 0.0, 1.0),
                   np.clip(1.0 - v1 / y_arr, 0.0, 1.0), state=0)
    return out if y_arr.shape else float(out)


def expected_norm_2d(grid: DistributionGrid, v: SortedVector,
                     quad_nodes: int | None = None) -> float:
    """E[p(v)] = max(v) + tail integral of 1 - P(p(v) < y) over the bracket,
    by trapezoidal quadrature."""
    if v.dim != 2:
        raise ValueError("expected_norm_2d takes 2-dimensional vectors")
    lo, hi = v.max_norm, v.one_norm
    if lo == 0.0:
        return 0.0
    if hi == lo:  # second component zero: normalization convention
        return lo
    if quad_nodes is None:
        quad_nodes = max(200, grid.x_axis.size)
    y = np.linspace(lo, hi, quad_nodes)
    tail = 1.0 - np.asarray(norm_cdf(grid, v, y))
    return float(lo + np.trapezoid(tail, y))


def unit_circle(grid: DistributionGrid, angle_count: int) -> ExpectedNormTable:
    """Unit-circle points of the expected norm over the first octant
    (angles in [0, pi/4]); the full circle follows by dihedral symmetry."""
    if angle_count < 3:
        raise ValueError("angle_count must be >= 3")
    theta = np.linspace(0.0, np.pi / 4, angle_count)
    dirs = np.column_stack([np.cos(theta), np.sin(theta)])
    vals = np.array([expected_norm_2d(grid, SortedVector(d)) for d in dirs])
    return ExpectedNormTable(2, dirs, vals,
                             provenance={"kind": "unit_circle",
                                         **grid.manifest()})


def full_circle_points(table: ExpectedNormTable) -> np.ndarray:
    """Expand first-octant unit-ball points to the full closed curve by the
    8 dihedral symmetries, ordered by angle."""
    if table.dimension != 2:
        raise ValueError("expected a 2-D table")
    q = table.points
    octants = [q, q[::-1, ::-1]]  # reflect across the diagonal
    quarter = np.vstack([octants[0][:-1], octants[1]])
    half = np.vstack([quarter[:-1], quarter[::-1] * [-1, 1]])
    full = np.vstack([half[:-1], half[::-1] * [1, -1]])
    return np.vstack([full, full[:1]])  # close the polyline


def weak_extension(grid: DistributionGrid, v: SortedVector) -> float:
    """Expected norm of the weak extension: the inner expectation is taken
    first at every induction level, so each level is one 2-D expected-norm
    evaluation of (outer component, inner expected value)."""
    if v.dim < 2:
        raise ValueError("weak extension needs dimension >= 2")
    if v.dim == 2:
        return expected_norm_2d(grid, v)
    inner = weak_extension(grid, SortedVector(v.components[1:]))
    pair = SortedVector.reduce([v.components[0], inner])
    return expected_norm_2d(grid, pair)


def strong_extension_sample(G: GeneratorMatrix, f: RewardFunction,
                            v: SortedVector, seed: int,
                            horizon: float = 1.0) -> float:
    """One draw of the strong extension: dim-1 independent paths nested
    innermost-first."""
    if v.dim < 2:
        raise ValueError("strong extension needs dimension >= 2")
    children = np.random.SeedSequence(seed).spawn(v.dim - 1)
    comps = v.components
    value = comps[-1]
    for level in range(v.dim - 2, -1, -1):
        child_seed = int(children[level].generate_state(1)[0])
        traj = sample_trajectory(G, 0, horizon, child_seed)
        path = from_trajectory(traj, f)
        pair = np.sort([comps[level], value])[::-1]
        value = evaluate_norm(path, pair)
    return value


def strong_extension_samples_2d(n: int, lam: float, v: SortedVector,
                                count: int, seed: int) -> np.ndarray:
    """Vectorized batch of 2-D strong-extension draws for the uniform
    pure-birth chain with f(k) = k/n (bisection run across all paths)."""
    from .ctmc import sample_pure_birth_jump_times
    if v.dim != 2:
        raise ValueError("batch sampler is 2-dimensional")
    v1, v2 = v.components
    if v1 == 0:
        return np.zeros(count)
    if v2 == 0:
        return np.full(count, v1)
    C = sample_pure_birth_jump_times(n, lam, 0, count, seed)
    f = np.arange(n + 1) / n

    def _X(u):  # occupation integral at per-sample times u
        reached = np.minimum(C, u[:, None])
        prev = np.concatenate([np.zeros((count, 1)), reached[:, :-1]], axis=1)
        return (reached - prev) @ f[:n] + f[n] * (u - reached[:, -1])

    lo = np.full(count, v1)
    hi = np.full(count, v1 + v2)
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        g = v1 / mid + _X(v2 / mid) - 1.0
        lo = np.where(g > 0, mid, lo)
        hi = np.where(g > 0, hi, mid)
    return 0.5 * (lo + hi)


def octant_sphere_mesh(resolution: int):
    """Lat-long mesh of the closed positive octant of the unit sphere.

    Returns (directions, faces): unit vectors of shape (m, 3) and triangle
    index triples.
    """
    if resolution < 3:
        raise ValueError("resolution must be >= 3")
    phi = np.linspace(0.0, np.pi / 2, resolution)  # polar angle from +z
    az = np.linspace(0.0, np.pi / 2, resolution)  # azimuth in the xy plane
    P, A = np.meshgrid(phi, az, indexing="ij")
    dirs = np.column_stack([
        (np.sin(P) * np.cos(A)).ravel(),
        (np.sin(P) * np.sin(A)).ravel(),
        np.cos(P).ravel(),
    ])
    faces = []
    for i in range(resolution - 1):
        for j in range(resolution - 1):
            a = i * resolution + j
            b = a + 1
            c = a + resolution
            d = c + 1
            faces.append((a, b, d))
            faces.append((a, d, c))
    return dirs, np.array(faces)


def unit_sphere_3d(grid: DistributionGrid, resolution: int) -> ExpectedNormTable:
    """Unit-sphere points of the expected weak-extension norm on the positive
    octant; the full sphere follows by sign flips and permutations."""
    dirs, faces = octant_sphere_mesh(resolution)
    cache: dict = {}
    vals = np.empty(dirs.shape[0])
    for i, d in enumerate(dirs):
        key = tuple(np.round(np.sort(d)[::-1], 15))
        if key not in cache:
            cache[key] = weak_extension(grid, SortedVector(np.array(key)))
        vals[i] = cache[key]
    prov = {"kind": "unit_sphere", "resolution": resolution,
            "symmetry_expansion": "48-element signed-permutation group",
            **grid.manifest()}
    return ExpectedNormTable(3, dirs, vals, provenance=prov, faces=faces)


def circle_to_svg(table: ExpectedNormTable, path, size: int = 640) -> None:
    """Minimal static SVG of the full expected-norm unit circle, with the
    1-norm and max-norm balls for reference."""
    pts = full_circle_points(table)
    scale = size / 2.6
    cx = cy = size / 2

    def fmt(points):
        return " ".join(f"{cx + scale * x:.2f},{cy - scale * y:.2f}"
                        for x, y in points)

    square = [(1, 1), (-1, 1), (-1, -1), (1, -1), (1, 1)]
    diamond = [(1, 0), (0, 1), (-1, 0), (0, -1), (1, 0)]
    with open(path, "w") as fh:
        fh.write(
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" '
            f'height="{size}" viewBox="0 0 {size} {size}">\n'
            f'<rect width="{size}" height="{size}" fill="white"/>\n'
            f'<polyline points="{fmt(square)}" fill="none" '
            f'stroke="#bbbbbb" stroke-dasharray="4 4"/>\n'
            f'<polyline points="{fmt(diamond)}" fill="none" '
            f'stroke="#bbbbbb" stroke-dasharray="4 4"/>\n'
            f'<polyline points="{fmt(pts)}" fill="none" stroke="#1f4e9c" '
            f'stroke-width="1.5"/>\n</svg>\n')


def sphere_to_obj(table: ExpectedNormTable, path) -> None:
    """OBJ-style vertex/face list of the octant mesh of the unit sphere."""
    if table.dimension != 3 or table.faces is None:
        raise ValueError("expected a 3-D mesh table")
    with open(path, "w") as fh:
        fh.write("# expected-norm unit sphere, positive octant\n")
        for x, y, z in table.points:
            fh.write(f"v {x!r} {y!r} {z!r}\n")
        for a, b, c in table.faces:
            fh.write(f"f {a + 1} {b + 1} {c + 1}\n")
