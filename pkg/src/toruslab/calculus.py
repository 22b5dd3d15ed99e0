"""Discrete symbol calculus: difference operators, seminorms, class fitting.

The regularity of a symbol p(x, xi) is measured through iterated forward
differences in xi and derivatives in x.  The quantities

    sup_x | d^beta_x D^alpha_xi p(x, xi) |

collected over dyadic frequency shells decay like powers of <xi>; the
exponents recover the order m, the frequency-smoothing exponent rho (from
first differences) and the spatial-loss exponent delta (from first
x-derivatives).  Fits are least squares in log-log coordinates with the two
outermost shells excluded.

x-derivatives come in two flavours: exact symbolic differentiation of the
expression tree (always available, used by the fitting machinery) and
spectral differentiation on a grid, which requires the symbol to be
x-band-limited and refuses to proceed otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .errors import EmptyDomainError, NumericalError, SpectralTailError, ValidationError
from .grid import GridFunction, GridSpec
from .symbols import TableSymbol, depends_on_x, diff_x_multi, eval_expr

# fraction of per-axis frequencies counted as the spectral tail, and the
# relative tail mass above which spectral differentiation refuses to run
TAIL_FRACTION = 3.0 / 8.0
TAIL_TOLERANCE = 1e-8


@dataclass(frozen=True)
class ClassParams:
    """Order/smoothness triple (m, rho, delta) with the derived loss exponent."""

    m: float
    rho: float
    delta: float

    def __post_init__(self):
        if not 0 < self.rho <= 1:
            raise ValidationError(f"rho={self.rho:g} must lie in (0, 1]", field="class.rho")
        if not 0 <= self.delta < 1:
            raise ValidationError(f"delta={self.delta:g} must lie in [0, 1)", field="class.delta")

    @property
    def lam(self) -> float:
        """max(0, (delta - rho)/2), the loss exponent in every threshold."""
        return max(0.0, (self.delta - self.rho) / 2.0)

    def seminorm_exponent(self, alpha, beta) -> float:
        """m - rho |alpha| + delta |beta|."""
        return self.m - self.rho * mi_abs(alpha) + self.delta * mi_abs(beta)


def mi_abs(alpha) -> int:
    return int(sum(alpha))


def mi_validate(alpha, dim) -> tuple:
    alpha = tuple(int(a) for a in alpha)
    if len(alpha) != dim:
        raise ValidationError(f"multi-index {alpha} has length {len(alpha)}, expected {dim}")
    if any(a < 0 for a in alpha):
        raise ValidationError(f"multi-index {alpha} has negative entries")
    return alpha


def difference_terms(alpha):
    """Expansion coefficients of the iterated forward difference.

    D^alpha p(xi) = sum_{gamma <= alpha} (-1)^{|alpha - gamma|} C(alpha, gamma)
                    p(xi + gamma), exactly.
    """
    ranges = [range(a + 1) for a in alpha]
    for gamma in product(*ranges):
        coef = 1.0
        for a, g in zip(alpha, gamma):
            coef *= math.comb(a, g)
        sign = (-1) ** (mi_abs(alpha) - mi_abs(gamma))
        yield gamma, sign * coef


def difference(sym, alpha, x, xi, params=None):
    """Exact iterated forward difference D^alpha_xi p at (x, xi).

    Accepts an expression tree or a TableSymbol; the latter raises when a
    shift would leave its stored box.  Broadcasts over array-valued x, xi
    for analytic symbols.
    """
    if isinstance(sym, TableSymbol):
        alpha = mi_validate(alpha, sym.lattice.dim)
        xi = tuple(int(v) for v in np.atleast_1d(xi))
        total = 0j
        for gamma, coef in difference_terms(alpha):
            shifted = tuple(v + g for v, g in zip(xi, gamma))
            total += coef * sym.eval(x, shifted)
        return total
    xi_arr = [np.asarray(c, dtype=float) for c in (xi if isinstance(xi, (tuple, list)) else [xi])]
    alpha = mi_validate(alpha, len(xi_arr))
    total = None
    for gamma, coef in difference_terms(alpha):
        shifted = tuple(c + g for c, g in zip(xi_arr, gamma))
        term = coef * eval_expr(sym, x, shifted if len(shifted) > 1 else shifted[0], params)
        total = term if total is None else total + term
    return total


def x_derivative(expr, beta, xi, spec: GridSpec, params=None) -> GridFunction:
    """Spectral x-derivative of x -> p(x, xi) at fixed xi, on the given grid.

    Transforms in x, multiplies by (2 pi i xi')^beta, transforms back.  The
    symbol must be x-band-limited on this grid: if the top-quarter spectral
    mass exceeds TAIL_TOLERANCE of the total, SpectralTailError is raised
    rather than returning a polluted derivative.
    """
    beta = mi_validate(beta, spec.dim)
    mesh = spec.mesh()
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    x_tuple = tuple(mesh)
    xi_tuple = tuple(np.full((), v) for v in xi)
    values = eval_expr(expr, x_tuple, xi_tuple, params)
    values = np.broadcast_to(np.asarray(values, dtype=np.complex128), spec.sizes)

    coeffs = np.fft.fftn(values)
    total = float(np.sum(np.abs(coeffs) ** 2))
    tail_mask = np.zeros(spec.sizes, dtype=bool)
    freq_axes = [np.fft.fftfreq(n, d=1.0 / n) for n in spec.sizes]
    for ax, freqs in enumerate(freq_axes):
        shape = [1] * spec.dim
        shape[ax] = spec.sizes[ax]
        tail_mask |= (np.abs(freqs) >= TAIL_FRACTION * spec.sizes[ax]).reshape(shape)
    tail = float(np.sum(np.abs(coeffs[tail_mask]) ** 2))
    if total > 0 and tail > TAIL_TOLERANCE * total:
        raise SpectralTailError(
            f"spectral tail mass {tail / total:.3e} exceeds {TAIL_TOLERANCE:g}; "
            "symbol too rough in x for this grid"
        )

    mult = np.ones(spec.sizes, dtype=np.complex128)
    for ax, freqs in enumerate(freq_axes):
        if beta[ax] == 0:
            continue
        shape = [1] * spec.dim
        shape[ax] = spec.sizes[ax]
        mult = mult * (2j * np.pi * freqs.reshape(shape)) ** beta[ax]
    out = np.fft.ifftn(coeffs * mult)
    return GridFunction(spec, out)


# ---------------------------------------------------------------------------
# Frequency shells
# ---------------------------------------------------------------------------


def dyadic_shells(lo: float, hi: float):
    """Dyadic shells [2^k, 2^{k+1}) covering [lo, hi] in bracket values."""
    if not (1.0 <= lo < hi):
        raise ValidationError(f"shell range ({lo:g}, {hi:g}) must satisfy 1 <= lo < hi")
    shells = []
    k = math.floor(math.log2(lo) + 1e-12)
    if 2.0**k < lo - 1e-12:
        k += 1
    while 2.0 ** (k + 1) <= hi * (1 + 1e-12):
        shells.append((2.0**k, 2.0 ** (k + 1)))
        k += 1
    if not shells:
        raise EmptyDomainError(f"no dyadic shells inside ({lo:g}, {hi:g})")
    return shells


def shell_lattice_points(lo: float, hi: float, dim: int) -> np.ndarray:
    """All xi in Z^dim with lo <= <xi> < hi, as an (S, dim) integer array."""
    rmax = math.floor(math.sqrt(max(hi**2 - 1.0, 0.0)))
    if dim == 1:
        xi = np.arange(-rmax, rmax + 1)[:, None]
    else:
        axes = [np.arange(-rmax, rmax + 1)] * dim
        xi = np.stack([m.ravel() for m in np.meshgrid(*axes, indexing="ij")], axis=-1)
    br = np.sqrt(1.0 + np.sum(xi.astype(float) ** 2, axis=-1))
    pts = xi[(br >= lo) & (br < hi)]
    if pts.size == 0:
        raise EmptyDomainError(f"shell [{lo:g}, {hi:g}) contains no lattice points")
    return pts


def _x_sample(dim: int, resolution: int) -> np.ndarray:
    axes = [np.arange(resolution) / resolution] * dim
    return np.stack([m.ravel() for m in np.meshgrid(*axes, indexing="ij")], axis=-1)


def _difference_values(expr, alpha, xi_pts, x_pts, params):
    """|D^alpha expr| on the x-sample x shell-point product, shape (X, S)."""
    xs = tuple(x_pts[:, j][:, None] for j in range(x_pts.shape[1]))
    total = None
    for gamma, coef in difference_terms(alpha):
        shifted = tuple(
            (xi_pts[:, j] + gamma[j]).astype(float)[None, :] for j in range(xi_pts.shape[1])
        )
        vals = eval_expr(expr, xs, shifted, params)
        term = coef * np.asarray(vals)
        total = term if total is None else total + term
    return np.abs(total)


def _shell_supremum(expr, alpha, xi_pts, x_pts, params):
    return float(np.max(_difference_values(expr, alpha, xi_pts, x_pts, params)))


def seminorm_constant(
    expr,
    alpha,
    beta,
    class_params: ClassParams,
    shell_range=(8.0, 512.0),
    dim: int = 1,
    params=None,
    x_resolution: int = 64,
) -> float:
    """Best constant for the class bound over the given shell range.

    Returns max over sampled x and shell frequencies of
    |d^beta_x D^alpha_xi p| <xi>^{-(m - rho|alpha| + delta|beta|)}.
    """
    alpha = mi_validate(alpha, dim)
    beta = mi_validate(beta, dim)
    tree = diff_x_multi(expr, beta)
    x_pts = _x_sample(dim, x_resolution if depends_on_x(tree) else 1)
    exponent = class_params.seminorm_exponent(alpha, beta)
    best = 0.0
    for lo, hi in dyadic_shells(*shell_range):
        xi_pts = shell_lattice_points(lo, hi, dim)
        best = max(best, _weighted_supremum(tree, alpha, xi_pts, x_pts, params, exponent))
    return best


def _weighted_supremum(expr, alpha, xi_pts, x_pts, params, exponent):
    vals = _difference_values(expr, alpha, xi_pts, x_pts, params)
    br = np.sqrt(1.0 + np.sum(xi_pts.astype(float) ** 2, axis=-1))[None, :]
    return float(np.max(vals * br ** (-exponent)))


@dataclass
class ClassEstimate:
    """Fitted class parameters with per-(alpha, beta) diagnostics."""

    params: ClassParams
    constants: dict
    fitted_m: float
    fitted_rho: float
    fitted_delta: float
    residuals: dict
    shells: list
    slopes: dict = field(default_factory=dict)

    def to_dict(self):
        key = lambda ab: f"{list(ab[0])}|{list(ab[1])}"
        return {
            "nominal": {"m": self.params.m, "rho": self.params.rho, "delta": self.params.delta},
            "fitted": {"m": self.fitted_m, "rho": self.fitted_rho, "delta": self.fitted_delta},
            "constants": {key(ab): v for ab, v in self.constants.items()},
            "slopes": {key(ab): v for ab, v in self.slopes.items()},
            "residuals": {key(ab): v for ab, v in self.residuals.items()},
            "shells": [list(s) for s in self.shells],
            "note": "finite-shell evidence only, not a membership certificate",
        }


def _loglog_fit(radii, values):
    """Least-squares slope of log(values) vs log(radii) with residual report."""
    u = np.log(np.asarray(radii, dtype=float))
    v = np.log(np.asarray(values, dtype=float))
    if u.size < 2 or np.ptp(u) == 0:
        raise NumericalError("degenerate fit: zero variance in abscissa")
    slope, intercept = np.polyfit(u, v, 1)
    resid = v - (slope * u + intercept)
    return {
        "slope": float(slope),
        "intercept": float(intercept),
        "max_abs_residual": float(np.max(np.abs(resid))),
        "npoints": int(u.size),
    }


def fit_order(
    expr,
    dim: int = 1,
    params=None,
    nominal: ClassParams = None,
    max_order: int = None,
    shell_range=(8.0, 512.0),
    x_resolution: int = 64,
) -> ClassEstimate:
    """Recover (m, rho, delta) from dyadic-shell suprema of difference/derivative data.

    fitted_m is the slope at alpha = beta = 0; rho comes from first
    differences only, delta from first x-derivatives only (higher orders
    amplify noise).  Differences are evaluated exactly at any lattice point,
    so there is no truncation edge; the contaminated shells are the two
    innermost (preasymptotic radii where subleading terms still compete) and
    those are dropped from every fit.  A derivative that vanishes
    identically contributes the best possible exponent of its kind
    (rho = 1, delta = 0).
    """
    if max_order is None:
        max_order = math.ceil(dim / 2) + 1
    shells = dyadic_shells(*shell_range)
    if len(shells) < 4:
        raise ValidationError(f"need >= 4 dyadic shells, got {len(shells)}")
    fit_shells = shells[2:]
    centers = [math.sqrt(lo * hi) for lo, hi in fit_shells]

    indices = [mi for mi in product(range(max_order + 1), repeat=dim) if mi_abs(mi) <= max_order]
    x_pts_full = _x_sample(dim, x_resolution)
    x_pts_one = _x_sample(dim, 1)

    sups = {}
    for alpha in indices:
        for beta in indices:
            tree = diff_x_multi(expr, beta)
            x_pts = x_pts_full if depends_on_x(tree) else x_pts_one
            sups[(alpha, beta)] = [
                _shell_supremum(tree, alpha, shell_lattice_points(lo, hi, dim), x_pts, params)
                for lo, hi in shells
            ]

    floor = 1e-14 * max(max(sups[(tuple([0] * dim), tuple([0] * dim))]), 1e-300)
    slopes, residuals = {}, {}
    for key, values in sups.items():
        fit_values = values[len(shells) - len(fit_shells) :]
        if max(fit_values) <= floor:
            slopes[key] = None
            residuals[key] = {"slope": None, "note": "vanishing derivative"}
            continue
        report = _loglog_fit(centers, np.maximum(fit_values, 1e-300))
        slopes[key] = report["slope"]
        residuals[key] = report

    zero = tuple([0] * dim)
    fitted_m = slopes[(zero, zero)]
    if fitted_m is None:
        raise NumericalError("symbol vanishes identically on the fitted shells")

    rho_terms = []
    for alpha in indices:
        if mi_abs(alpha) == 1:
            s = slopes.get((alpha, zero))
            rho_terms.append(1.0 if s is None else fitted_m - s)
    delta_terms = []
    for beta in indices:
        if mi_abs(beta) == 1:
            s = slopes.get((zero, beta))
            delta_terms.append(0.0 if s is None else s - fitted_m)
    fitted_rho = float(np.mean(rho_terms)) if rho_terms else 1.0
    fitted_delta = float(np.mean(delta_terms)) if delta_terms else 0.0

    ref = nominal if nominal is not None else ClassParams(
        fitted_m, min(max(fitted_rho, 1e-6), 1.0), min(max(fitted_delta, 0.0), 1.0 - 1e-9)
    )
    constants = {}
    for key, values in sups.items():
        alpha, beta = key
        exponent = ref.seminorm_exponent(alpha, beta)
        cs = [
            v * (math.sqrt(lo * hi)) ** (-exponent)
            for v, (lo, hi) in zip(values, shells)
        ]
        constants[key] = float(max(max(cs), 1e-300))

    return ClassEstimate(
        params=ref,
        constants=constants,
        fitted_m=float(fitted_m),
        fitted_rho=fitted_rho,
        fitted_delta=fitted_delta,
        residuals=residuals,
        shells=shells,
        slopes=slopes,
    )
