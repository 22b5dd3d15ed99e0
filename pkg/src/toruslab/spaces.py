"""Function-space norms and decompositions on the discrete torus.

Everything is quadrature-exact on the grid: L^p norms with the 1/G weight,
the weak-L^p seminorm through the sorted rearrangement, BMO over the family
of geodesic balls with all grid centers and dyadic radii, mean-zero atoms
on balls, the Hardy-Littlewood maximal function over the same ball family,
and the Calderon-Zygmund decomposition on the dyadic cube tree (the natural
tree on a power-of-two grid; balls and cubes are both kept, balls for
atoms/BMO and cubes for the stopping-time argument).

The BMO inner infimum over the centering constant is attained at the median
for real data; complex data uses the coordinatewise median (real and
imaginary parts separately), which is within a fixed factor of the true
minimizer and keeps the norm computable in closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .errors import ValidationError
from .grid import GridFunction, GridSpec, ball

# ---------------------------------------------------------------------------
# Scalar norms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NormValue:
    kind: str  # Lp | weakLp | BMO | operator-lower-bound
    exponent: object
    value: float
    method: str = ""

    def __post_init__(self):
        if not (np.isfinite(self.value) and self.value >= 0):
            raise ValidationError(f"norm value {self.value!r} must be finite and >= 0")


def lp_norm(f: GridFunction, p: float) -> NormValue:
    """((1/G) sum |f|^p)^(1/p); p = inf gives max |f|."""
    if p < 1:
        raise ValidationError(f"exponent p={p:g} must be >= 1")
    a = np.abs(f.values)
    if math.isinf(p):
        return NormValue("Lp", math.inf, float(a.max()), "max of samples")
    G = f.spec.npoints
    return NormValue("Lp", p, float((np.sum(a**p) / G) ** (1.0 / p)), "grid quadrature")


def weak_lp(f: GridFunction, p: float) -> NormValue:
    """sup_t t |{|f| > t}|^(1/p), exact on the grid via the rearrangement."""
    if p < 1:
        raise ValidationError(f"exponent p={p:g} must be >= 1")
    a = np.sort(np.abs(f.values).ravel())[::-1]
    G = a.size
    ranks = (np.arange(1, G + 1) / G) ** (1.0 / p)
    return NormValue("weakLp", p, float(np.max(a * ranks)), "sorted rearrangement")


# ---------------------------------------------------------------------------
# Ball families
# ---------------------------------------------------------------------------


def dyadic_radii(spec: GridSpec, min_cells: int = 2):
    """Radii 2^-k from 1/2 down to min_cells grid cells."""
    out = []
    k = 1
    while 2.0**-k * min(spec.sizes) >= min_cells - 1e-12:
        out.append(2.0**-k)
        k += 1
    return out


def _origin_ball_offsets(spec: GridSpec, radius: float) -> np.ndarray:
    """Flat offsets of grid points within geodesic distance ``radius`` of 0."""
    return ball(np.zeros(spec.dim), radius, spec)


def _gather_ball_values(values: np.ndarray, offsets: np.ndarray, spec: GridSpec) -> np.ndarray:
    """Matrix V[c, j] = values[(c + offset_j) mod N] over all grid centers c."""
    G = spec.npoints
    sizes = spec.sizes
    c_idx = np.unravel_index(np.arange(G), sizes)
    o_idx = np.unravel_index(offsets, sizes)
    flat = values.ravel()
    combined = np.zeros((G, offsets.size), dtype=np.int64)
    stride = 1
    for ax in range(spec.dim - 1, -1, -1):
        combined += ((c_idx[ax][:, None] + o_idx[ax][None, :]) % sizes[ax]) * stride
        stride *= sizes[ax]
    # strides above accumulate right-to-left in C order
    return flat[combined]


def bmo_norm(f: GridFunction, min_cells: int = 2) -> NormValue:
    """sup over balls of the median-centered mean oscillation.

    The family runs over every grid center and dyadic radii down to
    ``min_cells`` cells; the centering constant minimizing the L^1
    deviation is the median of the ball values.
    """
    spec = f.spec
    best = 0.0
    for radius in dyadic_radii(spec, min_cells=min_cells):
        offsets = _origin_ball_offsets(spec, radius)
        vals = _gather_ball_values(f.values, offsets, spec)
        med = np.median(vals.real, axis=1) + 1j * np.median(vals.imag, axis=1)
        osc = np.mean(np.abs(vals - med[:, None]), axis=1)
        best = max(best, float(osc.max()))
    return NormValue("BMO", None, best, "grid centers x dyadic radii, median centering")


def maximal_function(f: GridFunction) -> GridFunction:
    """Hardy-Littlewood maximal function over the dyadic-radius ball family.

    Mf(x) is the largest ball average of |f| over family balls containing x.
    Radii go all the way down to a single cell, so Mf >= |f| pointwise.
    """
    spec = f.spec
    a = np.abs(f.values)
    out = np.array(a)  # the single-cell ball contributes |f| itself
    for radius in dyadic_radii(spec, min_cells=2):
        offsets = _origin_ball_offsets(spec, radius)
        footprint = _centered_footprint(spec, radius)
        means = ndimage.correlate(a, footprint / offsets.size, mode="wrap")
        dilated = ndimage.maximum_filter(means, footprint=footprint, mode="wrap")
        out = np.maximum(out, dilated)
    return GridFunction(spec, out)


def _centered_footprint(spec: GridSpec, radius: float) -> np.ndarray:
    """Odd-sized window marking grid offsets within ``radius`` of the center."""
    half = [min(int(math.floor(radius * n)), n // 2 - 1) for n in spec.sizes]
    axes = [np.arange(-h, h + 1) / n for h, n in zip(half, spec.sizes)]
    mesh = np.meshgrid(*axes, indexing="ij")
    dist = np.sqrt(sum(m * m for m in mesh))
    return (dist < radius).astype(float)


# ---------------------------------------------------------------------------
# Atoms
# ---------------------------------------------------------------------------


@dataclass
class Atom:
    """Mean-zero profile supported on a ball with the H^1 normalization."""

    center: tuple
    radius: float
    values: GridFunction
    indices: np.ndarray = field(repr=False, default=None)

    @property
    def measure(self) -> float:
        return self.indices.size / self.values.spec.npoints

    def check(self, tol: float = 1e-12):
        spec = self.values.spec
        v = self.values.values.ravel()
        outside = np.setdiff1d(np.arange(spec.npoints), self.indices)
        if outside.size and np.max(np.abs(v[outside])) > tol:
            raise ValidationError("atom has mass outside its ball")
        if np.abs(v.sum() / spec.npoints) > tol:
            raise ValidationError("atom mean is not zero")
        if np.max(np.abs(v)) > 1.0 / self.measure + tol:
            raise ValidationError("atom sup exceeds 1/|B|")


def make_atom(center, radius: float, profile: GridFunction) -> Atom:
    """Mean-zero, sup-normalized atom from a profile restricted to a ball.

    Subtracts the ball mean, then scales down (never up) so that
    max |a| <= 1/|B|.  Rejects the whole torus as a support (no proper ball)
    and profiles that are constant on the ball (zero atom).
    """
    spec = profile.spec
    if radius >= math.sqrt(spec.dim) / 2:
        raise ValidationError("atom support must be a proper ball, not the whole torus")
    idx = ball(center, radius, spec)
    flat = np.zeros(spec.npoints, dtype=np.complex128)
    flat[idx] = profile.values.ravel()[idx]
    mean = flat[idx].mean()
    flat[idx] -= mean
    peak = np.max(np.abs(flat[idx]))
    if peak < 1e-14 * max(1.0, abs(mean)):
        raise ValidationError("profile is constant on the ball: zero atom")
    measure = idx.size / spec.npoints
    bound = 1.0 / measure
    if peak > bound:
        flat[idx] *= bound / peak
    atom = Atom(tuple(np.atleast_1d(center)), float(radius), GridFunction(spec, flat), idx)
    atom.check()
    return atom


# ---------------------------------------------------------------------------
# Calderon-Zygmund decomposition
# ---------------------------------------------------------------------------


@dataclass
class DyadicCube:
    """Axis-aligned dyadic cube: per-axis cell start and extent."""

    starts: tuple
    extents: tuple

    def slices(self):
        return tuple(slice(s, s + e) for s, e in zip(self.starts, self.extents))

    def to_dict(self):
        return {"starts": list(self.starts), "extents": list(self.extents)}


@dataclass
class CZDecomposition:
    level: float
    good: GridFunction
    bad_parts: list  # (DyadicCube, restricted values ndarray)
    omega_mask: np.ndarray
    flagged: bool

    @property
    def omega_measure(self) -> float:
        return float(np.count_nonzero(self.omega_mask) / self.omega_mask.size)

    def bad_sum(self) -> GridFunction:
        spec = self.good.spec
        out = np.zeros(spec.sizes, dtype=np.complex128)
        for cube, vals in self.bad_parts:
            out[cube.slices()] += vals
        return GridFunction(spec, out)

    def reconstruct(self) -> GridFunction:
        return GridFunction(
            self.good.spec, self.good.values + self.bad_sum().values
        )


def _abs_mean_pyramid(a: np.ndarray, levels: int):
    """Per-level cube means of ``a``: pyramid[l] has cubes of side N/2^l cells."""
    pyramid = [a]
    cur = a
    for _ in range(levels):
        for ax in range(cur.ndim):
            shape = list(cur.shape)
            shape[ax] //= 2
            shape.insert(ax + 1, 2)
            cur = cur.reshape(shape).mean(axis=ax + 1)
        pyramid.append(cur)
    return pyramid[::-1]  # root first


def cz_decompose(f: GridFunction, level: float) -> CZDecomposition:
    """Stopping-time decomposition f = g + sum b_j at the given level.

    Maximal dyadic cubes with mean |f| > level become the bad cubes Q_j;
    b_j = (f - mean_Q_j f) 1_{Q_j} and g agrees with f off their union and
    with the cube mean on each Q_j.  When level <= mean |f| the root itself
    is selected (the decomposition degenerates, flagged but not fatal).
    """
    if level <= 0:
        raise ValidationError(f"level must be positive, got {level:g}")
    spec = f.spec
    a = np.abs(f.values)
    max_level = int(math.log2(min(spec.sizes)))
    pyramid = _abs_mean_pyramid(a, max_level)
    flagged = float(pyramid[0].ravel()[0]) > level  # root mean |f| vs level
    selected = []

    def descend(depth, coords):
        mean_here = pyramid[depth][coords]
        scale = tuple(n // pyramid[depth].shape[ax] for ax, n in enumerate(spec.sizes))
        if mean_here > level:
            starts = tuple(c * s for c, s in zip(coords, scale))
            selected.append(DyadicCube(starts, scale))
            return
        if depth == len(pyramid) - 1:
            return
        for child in np.ndindex(*([2] * spec.dim)):
            descend(depth + 1, tuple(2 * c + d for c, d in zip(coords, child)))

    if flagged:
        selected.append(DyadicCube((0,) * spec.dim, spec.sizes))
    else:
        descend(0, (0,) * spec.dim)

    good = np.array(f.values)
    omega = np.zeros(spec.sizes, dtype=bool)
    bad_parts = []
    for cube in selected:
        sl = cube.slices()
        block = f.values[sl]
        mean = block.mean()
        bad_parts.append((cube, block - mean))
        good[sl] = mean
        omega[sl] = True
    return CZDecomposition(float(level), GridFunction(spec, good), bad_parts, omega, flagged)
