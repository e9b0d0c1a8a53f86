"""Floating-point realization of the weighted moment map, the patchworking
limit of its image heights, the hole around the origin, and amoeba sampling
for curves (ambient dimension 2).

Conventions: a torus point is stored by log-radii and phases; all weight
sums happen in log space with max subtraction, so the many orders of
magnitude spanned by |t|^lift never overflow.  Tolerances are centralized
below.
"""

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, NumericalError

GEOM_TOL = 1e-9
ROOT_TOL = 1e-12
ROOT_MAX_ITER = 200


@dataclass(frozen=True)
class TorusPoint:
    log_radii: tuple
    phases: tuple
    chart: str = "global"

    def __post_init__(self):
        if not all(np.isfinite(self.log_radii)):
            raise DomainError("non-finite log radii")


@dataclass(frozen=True)
class FamilyPoint:
    t_modulus: float
    t_phase: float = 0.0

    def __post_init__(self):
        if not self.t_modulus > 0:
            raise DomainError("t modulus must be positive")

    @property
    def log_modulus(self):
        return float(np.log(self.t_modulus))

    def power(self, exponent):
        """t^e as a complex number."""
        e = float(exponent)
        return self.t_modulus ** e * np.exp(1j * self.t_phase * e)


@dataclass
class AmoebaSample:
    points: tuple            # (moment image tuple, TorusPoint) pairs
    t: FamilyPoint
    nonconvergent: int = 0

    def moment_array(self):
        return np.array([m for m, _ in self.points], dtype=float)

    def min_distance_to(self, target):
        arr = self.moment_array()
        if arr.size == 0:
            raise NumericalError("amoeba sample is empty")
        d = arr - np.asarray(target, dtype=float)
        return float(np.min(np.sqrt(np.sum(d * d, axis=1))))


def _lift_floats(lam):
    return np.array([float(v) for v in lam.values], dtype=float)


def moment_batch(points, log_weights, R):
    """Moment images of a batch of log-radius vectors.

    points: (P, N) int array; log_weights: (P,) additive log weights
    (lift * log|t|); R: (B, N).  Returns (B, N) convex combinations.
    """
    E = R @ points.T + log_weights  # (B, P)
    E -= E.max(axis=1, keepdims=True)
    W = np.exp(E)
    W /= W.sum(axis=1, keepdims=True)
    return W @ points, W


def weighted_moment(x, t, config, lam):
    """Image of a torus point under the weighted moment map."""
    pts = np.array(config.points, dtype=float)
    logw = _lift_floats(lam) * t.log_modulus
    r = np.array(x.log_radii, dtype=float)[None, :]
    m, _ = moment_batch(pts, logw, r)
    return tuple(float(v) for v in m[0])


def _radius_grid(n, t, lam, resolution):
    big = max(abs(float(v)) for v in lam.values) if len(lam) else 0.0
    L = 3.0 + t.log_modulus * big
    axis = np.linspace(-L, L, resolution)
    grids = np.meshgrid(*([axis] * n), indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


def characteristic_floats(tri, lam):
    """Per-simplex affine forms (a, b) of the piecewise-linear lift extension."""
    from .linalg import affine_coordinates
    pts = tri.config.points
    forms = []
    for s in tri.max_simplices:
        base = [pts[i] for i in s]
        n = len(base[0])
        # solve value = a + <b, m> through the lifted simplex
        from .linalg import solve_linear
        rows = [[1] + list(p) for p in base]
        sol = solve_linear(rows, [lam[i] for i in s])
        forms.append((float(sol[0]), np.array([float(v) for v in sol[1:]])))
    return forms


def psi_numeric(tri, lam, M):
    """Evaluate the characteristic function at float points by locating the
    containing simplex (batch)."""
    pts = tri.config.points
    M = np.asarray(M, dtype=float)
    out = np.full(len(M), np.nan)
    filled = np.zeros(len(M), dtype=bool)
    forms = characteristic_floats(tri, lam)
    for s, (a, b) in zip(tri.max_simplices, forms):
        base = np.array([pts[i] for i in s], dtype=float)
        n = base.shape[1]
        A = np.vstack([base.T, np.ones(len(s))])
        Ainv = np.linalg.inv(A)
        rhs = np.hstack([M, np.ones((len(M), 1))])
        bary = rhs @ Ainv.T
        inside = np.all(bary >= -GEOM_TOL, axis=1) & ~filled
        out[inside] = a + M[inside] @ b
        filled |= inside
    if not filled.all():
        raise DomainError("points outside the polytope in characteristic eval")
    return out


def psi_t_gap(tri, lam, t, resolution):
    """Sup-norm distance between the weighted-moment image heights and the
    piecewise-linear limit, sampled over a log-radius grid.

    The image of the family hypersurface under the extended moment map is
    the graph of a function of the moment image; its height at a sample is
    the weight-average of the lift values.
    """
    if resolution < 1:
        raise DomainError("empty sampling grid")
    n = tri.config.polytope.ambient_dim
    pts = np.array(tri.config.points, dtype=float)
    lamf = _lift_floats(lam)
    logw = lamf * t.log_modulus
    R = _radius_grid(n, t, lam, resolution)
    M, W = moment_batch(pts, logw, R)
    heights = W @ lamf
    psi = psi_numeric(tri, lam, M)
    return float(np.max(np.abs(heights - psi)))


def durand_kerner(coeffs):
    """All complex roots of a polynomial, simultaneously and without
    deflation; deterministic initialization, roots sorted by (real, imag).

    coeffs: ascending complex coefficients.  Returns (roots, converged).
    """
    c = np.asarray(coeffs, dtype=complex)
    scale = np.max(np.abs(c))
    if scale == 0:
        raise DomainError("zero polynomial")
    # drop a vanishing leading coefficient (root escaped to infinity)
    while len(c) > 1 and abs(c[-1]) <= 1e-14 * scale:
        c = c[:-1]
    d = len(c) - 1
    if d == 0:
        return (), True
    c = c / c[-1]
    radius = 1.0 + float(np.max(np.abs(c[:-1])))
    k = np.arange(d)
    z = radius * np.exp(2j * np.pi * k / d + 0.4j)
    converged = False
    for _ in range(ROOT_MAX_ITER):
        p = np.polyval(c[::-1], z)
        diff = z[:, None] - z[None, :]
        np.fill_diagonal(diff, 1.0)
        denom = np.prod(diff, axis=1)
        step = p / denom
        z = z - step
        if np.max(np.abs(step)) < ROOT_TOL:
            converged = True
            break
    order = np.lexsort((z.imag, z.real))
    return tuple(z[order]), converged


def family_coefficients(config, lam, t):
    """Monomial coefficients of the one-parameter family hypersurface:
    t^lift(0) on the origin monomial minus t^lift(omega) on the boundary."""
    coeffs = {}
    o = config.origin_index
    coeffs[config.points[o]] = t.power(lam[o])
    for i in config.boundary_indices():
        coeffs[config.points[i]] = -t.power(lam[i])
    return coeffs


def _threads():
    cap = os.environ.get("TORUSLAB_THREADS")
    n = os.cpu_count() or 1
    if cap:
        try:
            n = max(1, min(n, int(cap)))
        except ValueError:
            pass
    return n


def amoeba_sample(coeffs, config, lam, t, resolution, radius_span=None):
    """Sample a plane curve and push it through the weighted moment map.

    coeffs: mapping exponent pair -> complex coefficient of the curve.
    The first coordinate runs over a deterministic phase x log-radius grid;
    the second is solved by simultaneous root iteration.  Output ordering is
    grid order, then root order, independent of the worker count.
    """
    n = config.polytope.ambient_dim
    if n != 2:
        raise DomainError("amoeba sampling is implemented for N = 2 only")
    exps = sorted(coeffs)
    e2 = [e[1] for e in exps]
    shift = -min(e2)
    degree = max(e2) + shift
    if degree == 0:
        raise DomainError("curve is independent of the solved coordinate")
    if radius_span is None:
        big = max(abs(float(v)) for v in lam.values)
        radius_span = 3.0 + t.log_modulus * big
    radii = np.linspace(-radius_span, radius_span, resolution)
    phases = np.linspace(0.0, 2.0 * np.pi, resolution, endpoint=False)
    pts = np.array(config.points, dtype=float)
    logw = _lift_floats(lam) * t.log_modulus

    def solve_cell(args):
        r1, th1 = args
        y1 = np.exp(r1 + 1j * th1)
        poly = np.zeros(degree + 1, dtype=complex)
        for (a1, a2), cf in coeffs.items():
            poly[a2 + shift] += cf * y1 ** a1
        if np.max(np.abs(poly)) == 0:
            return [], 0
        roots, ok = durand_kerner(poly)
        out = []
        bad = 0 if ok else 1
        for z in roots:
            if abs(z) < 1e-300:
                continue
            r = np.array([[r1, float(np.log(abs(z)))]])
            m, _ = moment_batch(pts, logw, r)
            tp = TorusPoint((r1, float(np.log(abs(z)))),
                            (float(th1 % (2 * np.pi)),
                             float(np.angle(z) % (2 * np.pi))))
            out.append((tuple(float(v) for v in m[0]), tp))
        return out, bad

    cells = [(float(r), float(th)) for r in radii for th in phases]
    nonconv = 0
    collected = []
    workers = _threads()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(solve_cell, cells))
    else:
        results = [solve_cell(c) for c in cells]
    for out, bad in results:
        collected.extend(out)
        nonconv += bad
    sample = AmoebaSample(tuple(collected), t, nonconv)
    arr = sample.moment_array()
    if arr.size:
        poly = config.polytope
        for u, c in poly.facets():
            vals = arr @ np.array(u, dtype=float)
            if np.min(vals) < c - GEOM_TOL:
                raise AssertionError("moment image escaped the polytope")
    return sample


def hole_radius(config, lam, t, resolution=48):
    """Smallest distance from the sampled family-curve image to the origin.

    Positive for large |t|: the moment image of the family misses a ball
    around the interior lattice point.
    """
    coeffs = family_coefficients(config, lam, t)
    sample = amoeba_sample(coeffs, config, lam, t, resolution)
    if not sample.points:
        raise NumericalError("amoeba sampler returned no points")
    return sample.min_distance_to(config.polytope.origin)
