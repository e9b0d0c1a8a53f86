"""The torus fibration over the boundary sphere: limit intervals, cutoff
functions and the auxiliary hypersurface, fiber classification and sampling,
the positive-real zero section, and the deformation bridge back to the
algebraic family.

Limit intervals are implemented in their large-parameter limit: the interval
over a boundary point is the radial segment from the quarter-scale inner
copy out to the boundary (the projection of the ray through the lifted
point).  Cutoff bumps are piecewise linear in second-barycentric coordinates,
a deliberate continuous-level weakening of the smooth partitions.
"""

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .basecomplex import WCellComplex, barycentric, _centroid
from .errors import DomainError, NumericalError
from .lattice import normalized_volume
from .linalg import (affine_coordinates, complete_to_unimodular, dot,
                     lattice_basis, mat_det, mat_inverse_int, mat_rank,
                     solve_linear, vec_sub)
from .lp import SlackSystem
from .moment import FamilyPoint, TorusPoint, moment_batch

MINI_COPY_SCALE = Fraction(1, 4)
DISCRIMINANT_TOL = 1e-10
SECTION_TOL = 1e-12

# ---------------------------------------------------------------------------
# cutoff functions


class CutoffFamily:
    """Piecewise-linear partition of unity subordinate to the cell cover.

    rho0[tau] is the sum of the Bar^2 hat functions at vertices whose chain
    bottoms out at tau; the cutoffs rho_omega sum rho0 over the cells whose
    simplex contains the vertex omega.  The origin cutoff is identically 1.
    """

    def __init__(self, wcomplex):
        self.w = wcomplex
        bnd = wcomplex.boundary
        bar2 = wcomplex.bar2
        self.config = bnd.config
        labels = []
        for chain in bar2.vertex_labels:
            labels.append(tuple(sorted(chain[0])))
        self._vertex_cells = tuple(labels)
        self._coords = np.array(
            [[float(x) for x in c] for c in bar2.vertex_coords])
        n = self.config.polytope.ambient_dim
        mats, verts, carriers = [], [], []
        for s, sigma in zip(bar2.maximal, wcomplex._carriers):
            base = np.array([self._coords[i] for i in s]).T  # (N, N) columns
            A = np.vstack([base, np.ones(len(s))])
            # boundary simplices have N vertices in R^N: the affine system is
            # overdetermined, pinv solves it exactly on the affine hull
            mats.append((np.linalg.pinv(A), A))
            verts.append(s)
            carriers.append(sigma)
        self._mats = mats
        self._verts = np.array(verts)
        self._simplex_cells = tuple(
            wcomplex._owners[i] for i in range(len(bar2.maximal)))

    def hat_values(self, s):
        """Mapping cell tau -> rho0_tau(s) for a boundary point (floats)."""
        pt = np.append(np.asarray(s, dtype=float), 1.0)
        best = None
        for mi, (m, A) in enumerate(self._mats):
            bary = m @ pt
            resid = float(np.max(np.abs(A @ bary - pt)))
            worst = bary.min() - resid
            if best is None or worst > best[0]:
                best = (worst, mi, bary)
            if worst >= 0:
                break
        worst, mi, bary = best
        if worst < -1e-9:
            raise DomainError(f"point {s} is not on the boundary")
        bary = np.clip(bary, 0.0, None)
        bary /= bary.sum()
        out = {}
        for b, vi in zip(bary, self._verts[mi]):
            tau = self._vertex_cells[vi]
            out[tau] = out.get(tau, 0.0) + float(b)
        return out

    def rho0(self, tau, s):
        return self.hat_values(s).get(tuple(sorted(tau)), 0.0)

    def rho(self, omega_index, s):
        """Cutoff of the monomial at omega evaluated at a boundary point."""
        if omega_index == self.config.origin_index:
            return 1.0
        hats = self.hat_values(s)
        return sum(v for tau, v in hats.items() if omega_index in tau)

    def rho_all(self, s):
        """Vector of cutoffs over the whole configuration at once."""
        hats = self.hat_values(s)
        out = np.zeros(len(self.config))
        out[self.config.origin_index] = 1.0
        for tau, v in hats.items():
            for i in tau:
                out[i] += v
        return out


def cutoff_family(wcomplex):
    return CutoffFamily(wcomplex)


def radial_boundary_point(poly, m):
    """Scale a nonzero interior point radially out to the boundary."""
    m = tuple(Fraction(x) if not isinstance(x, float) else x for x in m)
    if all(x == 0 for x in m):
        raise DomainError("cannot project the origin to the boundary")
    best = None
    for u, c in poly.facets():
        den = dot(u, m)
        if den < 0:
            theta = Fraction(c) / den if not isinstance(den, float) else c / den
            if best is None or theta < best:
                best = theta
    return tuple(x * best for x in m)


# ---------------------------------------------------------------------------
# limit intervals


@dataclass(frozen=True)
class LimitInterval:
    base_point: tuple       # s on the boundary
    inner_point: tuple      # on the quarter-scale inner copy
    cell: tuple             # boundary simplex indexing the W-cell of s
    on_frontier: bool       # s sits on a cell frontier (minimal cell used)
    constancy_ok: bool      # exact first-k radii constancy certificate

    def point(self, theta):
        """Affine parameterization: theta in [1/4, 1] scales out to s."""
        return tuple(Fraction(theta) * Fraction(x) for x in self.base_point)


def limit_interval(s, tri, lam, wcomplex=None):
    """The fibration interval over a rational boundary point: the radial
    segment from the quarter-scale copy to s, with an exact certificate
    that the ray construction keeps the cell's monomial weights
    proportional along it."""
    w = wcomplex or WCellComplex(tri.boundary())
    s = tuple(Fraction(x) for x in s)
    tau, pure = w.locate(s)
    inner = tuple(x * MINI_COPY_SCALE for x in s)
    ok = _constancy_certificate(tri, lam, s, tau)
    return LimitInterval(s, inner, tau, not pure, ok)


def _constancy_certificate(tri, lam, s, tau):
    """The lifted ray keeps weight ratios among the cell's points constant.

    Locates a carrier boundary simplex of s containing the cell simplex,
    lifts s to the graph of the characteristic function, and verifies
    exactly that the barycentric weights of two interior ray points (in the
    lifted cone simplex) are proportional.  The weight ratios are what fix
    the leading chart radii, so proportionality is the constancy statement.
    """
    pts = tri.config.points
    o = tri.config.origin_index
    carrier = None
    for sigma in tri.boundary().maximal:
        if not set(tau) <= set(sigma):
            continue
        coords = affine_coordinates([pts[i] for i in sigma], s)
        if coords is not None and all(c >= 0 for c in coords):
            carrier = sigma
            break
    if carrier is None:
        return False
    cone = (o,) + carrier
    lifted = [pts[i] + (lam[i],) for i in cone]
    psi_s = sum(c * lam[i] for i, c in
                zip(carrier, affine_coordinates([pts[i] for i in carrier], s)))
    apex = pts[o] + (lam[o],)
    s_lift = tuple(s) + (psi_s,)
    weights = []
    for theta in (Fraction(1, 3), Fraction(2, 3)):
        xi = tuple((1 - theta) * a + theta * b for a, b in zip(apex, s_lift))
        bary = affine_coordinates(lifted, xi)
        if bary is None or any(b < 0 for b in bary):
            return False
        weights.append(bary[1:])  # coordinates on the carrier points
    w1, w2 = weights
    for i in range(len(w1)):
        for j in range(len(w1)):
            if w1[i] * w2[j] != w2[i] * w1[j]:
                return False
    return True


# ---------------------------------------------------------------------------
# tau-associated charts


@dataclass(frozen=True)
class TauChart:
    """Affine coordinates adapted to a boundary simplex.

    rows: unimodular basis e_1..e_N of the lattice; the first k span the
    lattice of the simplex, the first l the lattice of its carrier face, and
    the last N-l sum to minus the reference vertex, so the product of the
    last coordinates is the origin monomial over the reference one.
    """

    tau: tuple
    reference: tuple       # the vertex Omega
    rows: tuple            # N x N integer matrix, rows e_i
    k: int
    l: int

    def to_chart(self, vec):
        """Coordinates of a lattice vector in the chart basis (solves
        c @ rows = vec exactly)."""
        sol = solve_linear([[self.rows[i][j] for i in range(len(self.rows))]
                            for j in range(len(vec))], list(vec))
        return sol

    def chart_matrix(self):
        return np.array(self.rows, dtype=float)


def tau_chart(tri, tau):
    """Build the adapted chart for a boundary simplex, deterministically."""
    config = tri.config
    poly = config.polytope
    n = poly.ambient_dim
    boundary = tri.boundary()
    tau = tuple(sorted(tau))
    pts = [config.points[i] for i in tau]
    omega = min(pts)
    k = len(tau) - 1
    theta = boundary.minimal_face_of(tau)
    l = theta.dim
    tau_lat = lattice_basis([vec_sub(p, omega)
                             for p in _simplex_points(pts)])
    face_pts = [poly.vertices[i] for i in theta.vertex_indices]
    face_lattice_pts = [p for p in poly.lattice_points()
                        if _on_face(poly, theta, p)]
    theta_lat = lattice_basis([vec_sub(p, omega) for p in face_lattice_pts])
    assert len(tau_lat) == k and len(theta_lat) == l
    e_rows = _extend_basis(tau_lat, theta_lat)
    f_rows = _complement_with_sum(poly, theta, e_rows, omega, n)
    rows = tuple(tuple(r) for r in (e_rows + f_rows))
    d = int(mat_det(rows))
    if abs(d) != 1:
        raise DomainError("chart completion is not unimodular; "
                          "polytope data violates the nonsingularity assumptions")
    return TauChart(tau, omega, rows, k, l)


def _simplex_points(pts):
    from .lattice import _simplex_lattice_points
    return _simplex_lattice_points([tuple(p) for p in pts])


def _on_face(poly, face, p):
    if face.dim == poly.ambient_dim:
        return True
    return dot(face.normal, p) == face.offset


def _extend_basis(inner, outer):
    """Extend a basis of an inner lattice to one of an outer lattice
    (inner must be primitive inside outer)."""
    if not outer:
        return [tuple(r) for r in inner]
    # coordinates of everything in the outer basis
    from .lattice import _coords_in_basis
    k = len(inner)
    l = len(outer)
    inner_coords = [tuple(int(x) for x in _coords_in_basis(v, outer))
                    for v in inner]
    if k == 0:
        return [tuple(r) for r in outer]
    comp = complete_to_unimodular(inner_coords, l)
    rows = []
    for c in comp:
        rows.append(tuple(sum(c[j] * outer[j][i] for j in range(l))
                          for i in range(len(outer[0]))))
    return rows


def _complement_with_sum(poly, theta, theta_basis, omega, n):
    """Last N-l basis vectors of the chart, summing to -Omega.

    Works in the quotient by the carrier-face lattice: the facets through
    the face pair unimodularly with any complement basis (nonsingularity),
    and each pairs to 1 with -Omega (unit integral distance), so -Omega is
    primitive in the quotient and a unimodular row set with row sum -Omega
    mod the face lattice exists; the leftover face-lattice part is absorbed
    into the last row.
    """
    l = len(theta_basis)
    if l == n:
        raise DomainError("carrier face is full-dimensional")
    try:
        full = complete_to_unimodular(theta_basis, n) if l else \
            [tuple(1 if i == j else 0 for j in range(n)) for i in range(n)]
    except ValueError as exc:
        raise DomainError(f"face lattice is not saturated: {exc}")
    h = full[l:]
    facets = [(u, c) for u, c in poly.facets()
              if all(dot(u, poly.vertices[i]) == c
                     for i in theta.vertex_indices)]
    if len(facets) != n - l:
        raise DomainError(
            f"face has {len(facets)} containing facets, expected {n - l}")
    phi = [[dot(u, hi) for hi in h] for u, _ in facets]
    if abs(mat_det(phi)) != 1:
        raise DomainError("facet normals through the face do not form a "
                          "unimodular frame; polytope is not nonsingular there")
    o = poly.origin
    rhs = [dot(u, o) - dot(u, omega) for u, _ in facets]   # all 1 for reflexive
    beta = solve_linear(phi, rhs)
    beta = [int(b) for b in beta]
    m = n - l
    if m == 1:
        C = [[beta[0]]]
        if abs(beta[0]) != 1:
            raise DomainError("origin is not at unit height over the facet")
    else:
        try:
            comp = complete_to_unimodular([tuple(beta)], m)
        except ValueError as exc:
            raise DomainError(f"quotient image of the origin offset is not "
                              f"primitive: {exc}")
        first = [beta[j] - sum(comp[i][j] for i in range(1, m))
                 for j in range(m)]
        C = [first] + [list(comp[i]) for i in range(1, m)]
    gs = [tuple(sum(C[i][j] * h[j][col] for j in range(m))
                for col in range(n)) for i in range(m)]
    target = [o_c - w for o_c, w in zip(o, omega)]   # the vector -Omega + origin
    resid = vec_sub(tuple(target), tuple(v for v in _row_sum(gs, n)))
    if l:
        from .lattice import _coords_in_basis
        coords = _coords_in_basis(resid, theta_basis)
        if any(c.denominator != 1 for c in coords):
            raise DomainError("origin offset is not integral over the face lattice")
    elif any(resid):
        raise DomainError("offset residual outside the face lattice")
    gs[-1] = tuple(a + b for a, b in zip(gs[-1], resid))
    return [tuple(g) for g in gs]


def _row_sum(rows, n):
    return tuple(sum(r[i] for r in rows) for i in range(n))


# ---------------------------------------------------------------------------
# fiber classification


@dataclass(frozen=True)
class FiberType:
    cell: tuple            # boundary simplex tau
    k: int                 # dim tau
    l: int                 # dim of the carrier face of tau
    L: int                 # dim of the face whose interior holds the point
    degree: int            # covering degree of the monomial map over tau
    description: str
    smooth: bool
    may_degenerate: bool   # the base torus can meet the discriminant here


def _fiber_description(n, k, l, L, degree):
    if L == n - 1:
        return f"smooth T^{n - 1}"
    if n == 3 and (k, l, L) == (1, 1, 1):
        return f"I{degree}: circle of 2-tori with {degree} pinches"
    return (f"T^{L - l} x ((T^{l} x T^{n - 1 - L})/~ over a degree-{degree} "
            f"discriminant)")


def fiber_type(s, tri, lam, wcomplex=None):
    """Classify the torus fiber over a rational boundary point."""
    w = wcomplex or WCellComplex(tri.boundary())
    s = tuple(Fraction(x) for x in s)
    tau, _ = w.locate(s)
    boundary = tri.boundary()
    k = len(tau) - 1
    theta = boundary.minimal_face_of(tau)
    l = theta.dim
    poly = tri.config.polytope
    L = None
    for face in poly.face_lattice():
        if face.dim == poly.ambient_dim:
            continue
        if dot(face.normal, s) == face.offset:
            L = face.dim
            break
    if L is None:
        raise DomainError(f"point {s} is not on the boundary of the polytope")
    n = poly.ambient_dim
    degree = covering_degree_of(tri, tau)
    smooth = L == n - 1
    may_deg = (k >= 1) and (L <= n - 2)
    return FiberType(tau, k, l, L, degree,
                     _fiber_description(n, k, l, L, degree), smooth, may_deg)


def covering_degree_of(tri, tau):
    pts = [tri.config.points[i] for i in tau]
    return normalized_volume(pts)


def fiber_census(tri, lam, wcomplex=None):
    """One classification row per W-cell, evaluated at the cell center."""
    w = wcomplex or WCellComplex(tri.boundary())
    rows = []
    for tau in tri.boundary().simplices:
        center = _centroid([tri.config.points[i] for i in tau])
        rows.append(fiber_type(center, tri, lam, w))
    return rows


# ---------------------------------------------------------------------------
# inverse weighted moment (positive points)


def invert_moment(points, log_weights, M, tol=1e-13, iters=120):
    """Log-radius vectors of the positive points with prescribed moment
    images: damped Newton on the strictly convex log-partition potential."""
    P = np.asarray(points, dtype=float)
    M = np.atleast_2d(np.asarray(M, dtype=float))
    B, n = M.shape
    R = np.zeros((B, n))
    ok = np.zeros(B, dtype=bool)
    for _ in range(iters):
        E = R @ P.T + log_weights
        E -= E.max(axis=1, keepdims=True)
        W = np.exp(E)
        W /= W.sum(axis=1, keepdims=True)
        mu = W @ P
        grad = mu - M
        ok = np.max(np.abs(grad), axis=1) < tol
        if ok.all():
            break
        H = np.einsum("bp,pi,pj->bij", W, P, P) - \
            np.einsum("bi,bj->bij", mu, mu)
        H += 1e-14 * np.eye(n)
        try:
            step = np.linalg.solve(H, grad[..., None])[..., 0]
        except np.linalg.LinAlgError:
            step = np.stack([np.linalg.lstsq(H[b], grad[b], rcond=None)[0]
                             for b in range(B)])
        norms = np.linalg.norm(step, axis=1, keepdims=True)
        safe = np.where(norms > 4.0, norms, 1.0)
        step = np.where(norms > 4.0, step * (4.0 / safe), step)
        R = R - step
    return R, ok


def interval_radii(tri, lam, t, s, thetas):
    """Log radii of the positive points over the limit interval at the given
    radial parameters (batch)."""
    pts = np.array(tri.config.points, dtype=float)
    logw = np.array([float(v) for v in lam.values]) * t.log_modulus
    sf = np.array([float(x) for x in s], dtype=float)
    M = np.outer(np.asarray(thetas, dtype=float), sf)
    R, ok = invert_moment(pts, logw, M)
    if not ok.all():
        raise NumericalError("moment inversion failed along the interval")
    return R


# ---------------------------------------------------------------------------
# auxiliary hypersurface


def auxiliary_eval(x, t, cutoffs, lam, s=None):
    """Value of the auxiliary (cutoff-weighted) hypersurface equation at a
    torus point.  The cutoffs are evaluated at the radial boundary
    projection of the weighted moment image unless a base point s is given.
    """
    config = cutoffs.config
    pts = config.points
    if s is None:
        logw = np.array([float(v) for v in lam.values]) * t.log_modulus
        P = np.array(pts, dtype=float)
        m, _ = moment_batch(P, logw, np.array([x.log_radii], dtype=float))
        s = radial_boundary_point(config.polytope, tuple(float(v) for v in m[0]))
    rho = cutoffs.rho_all(s)
    o = config.origin_index
    r = np.array(x.log_radii)
    ph = np.array(x.phases)
    total = t.power(lam[o]) + 0j
    for i in config.boundary_indices():
        if rho[i] == 0.0:
            continue
        w = np.array(pts[i], dtype=float)
        mono = np.exp(w @ r + 1j * (w @ ph))
        total -= rho[i] * t.power(lam[i]) * mono
    return complex(total)


def gradient_norm(x, t, cutoffs, lam, s=None, h=1e-6):
    """Finite-difference gradient magnitude of the auxiliary equation in the
    log-radius/phase chart (numeric stand-in for transversality)."""
    base = np.array(list(x.log_radii) + list(x.phases))
    n = len(x.log_radii)

    def at(vec):
        tp = TorusPoint(tuple(vec[:n]), tuple(vec[n:]))
        return auxiliary_eval(tp, t, cutoffs, lam, s=s)

    grads = []
    for j in range(len(base)):
        e = np.zeros(len(base))
        e[j] = h
        grads.append((at(base + e) - at(base - e)) / (2 * h))
    return float(np.linalg.norm(grads))


# ---------------------------------------------------------------------------
# zero section


@dataclass(frozen=True)
class SectionPoint:
    point: TorusPoint
    theta: float
    residual: float


def _section_values(tri, lam, t, s, rho, thetas):
    """Normalized auxiliary values (1 - weighted monomial sum) at positive
    points over the interval parameters; sign changes locate the section."""
    config = tri.config
    o = config.origin_index
    R = interval_radii(tri, lam, t, s, thetas)
    pts = np.array(config.points, dtype=float)
    vals = np.ones(len(thetas))
    lam0 = float(lam[o])
    for i in config.boundary_indices():
        if rho[i] == 0.0:
            continue
        scale = t.t_modulus ** (float(lam[i]) - lam0)
        vals -= rho[i] * scale * np.exp(R @ pts[i])
    return vals


def zero_section(s, tri, lam, t, cutoffs, theta_lo=None, theta_hi=0.999,
                 bisection_steps=100):
    """The unique positive-real point of the auxiliary hypersurface on the
    limit interval over s, by bisection on the radial parameter.

    The origin term dominates at the inner end and the boundary terms at the
    outer end; absence of a sign change means |t| is too small.
    """
    if t.t_phase != 0.0:
        raise DomainError("the zero section is defined at positive real t")
    sf = tuple(float(x) for x in s)
    rho = cutoffs.rho_all(sf)
    lo = float(MINI_COPY_SCALE) if theta_lo is None else theta_lo
    hi = theta_hi
    f_lo, f_hi = _section_values(tri, lam, t, sf, rho, [lo, hi])
    if not (f_lo > 0 and f_hi < 0):
        raise NumericalError(
            f"no sign change on the interval (values {f_lo:.3g}, {f_hi:.3g}); "
            "increase |t|")
    for _ in range(bisection_steps):
        mid = 0.5 * (lo + hi)
        f_mid = _section_values(tri, lam, t, sf, rho, [mid])[0]
        if f_mid > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-17:
            break
    theta = 0.5 * (lo + hi)
    R = interval_radii(tri, lam, t, sf, [theta])
    point = TorusPoint(tuple(float(v) for v in R[0]),
                       (0.0,) * len(sf))
    o = tri.config.origin_index
    residual = abs(_section_values(tri, lam, t, sf, rho, [theta])[0]) \
        * t.t_modulus ** float(lam[o])
    return SectionPoint(point, theta, residual)


def section_sign_changes(s, tri, lam, t, cutoffs, subdivisions=10_000,
                         theta_lo=None, theta_hi=0.999):
    """Count sign changes of the section equation along the interval."""
    sf = tuple(float(x) for x in s)
    rho = cutoffs.rho_all(sf)
    lo = float(MINI_COPY_SCALE) if theta_lo is None else theta_lo
    thetas = np.linspace(lo, theta_hi, subdivisions)
    vals = _section_values(tri, lam, t, sf, rho, thetas)
    signs = np.sign(vals)
    signs = signs[signs != 0]
    return int(np.sum(signs[1:] != signs[:-1]))


# ---------------------------------------------------------------------------
# fiber sampling


@dataclass(frozen=True)
class FiberSample:
    cell: tuple                 # W-cell of the base point
    chart_cell: tuple           # simplex carrying the active monomials
    chart: "TauChart"
    points: tuple               # TorusPoint in chart coordinates
    degenerate_bases: tuple     # base phase tuples on the discriminant
    base_radii: tuple           # chart log radii of the leading coordinates


def _active_cell(tri, cutoffs, s):
    """The simplex spanned by the monomials with nonzero cutoff at s."""
    rho = cutoffs.rho_all(s)
    o = tri.config.origin_index
    active = tuple(sorted(i for i in tri.config.boundary_indices()
                          if rho[i] > 0.0))
    if active not in tri.boundary().simplices:
        raise DomainError(f"active monomials {active} do not span a simplex")
    return active, rho


def _face_radii(tri, lam, t, chart, s):
    """Chart log radii of the leading coordinates at a boundary point, from
    the moment map of the carrier face."""
    config = tri.config
    l = chart.l
    if l == 0:
        return ()
    face_pts = []
    coords = []
    for i, p in enumerate(config.points):
        c = chart.to_chart(vec_sub(p, chart.reference))
        if c is None:
            continue
        if all(x == 0 for x in c[l:]) and all(x.denominator == 1 for x in c):
            face_pts.append(i)
            coords.append([int(x) for x in c[:l]])
    target = chart.to_chart(vec_sub(tuple(Fraction(x) for x in s),
                                    chart.reference))
    if target is None or any(x != 0 for x in target[l:]):
        raise DomainError("base point is not on the chart's carrier face")
    tgt = [float(x) for x in target[:l]]
    logw = np.array([float(lam[i]) for i in face_pts]) * t.log_modulus
    R, ok = invert_moment(np.array(coords, dtype=float), logw, [tgt])
    if not ok.all():
        raise NumericalError("face moment inversion failed")
    return tuple(float(v) for v in R[0])


def _poly_on_base(tri, lam, t, cutoffs, chart, active, rho, base_radii):
    """P_t as a coefficient list over the chart exponents of the active
    monomials; callable at a base phase tuple."""
    o = tri.config.origin_index
    lam0 = float(lam[o])
    terms = []
    for i in active:
        c = chart.to_chart(vec_sub(tri.config.points[i], chart.reference))
        cexp = [int(x) for x in c]
        if any(cexp[chart.k:]):
            raise AssertionError("active monomial leaves the chart simplex")
        coeff = rho[i] * t.power(float(lam[i]) - lam0)
        terms.append((cexp[:chart.k], coeff))

    def P(phases):
        total = 0j
        for cexp, coeff in terms:
            z = coeff
            for j, e in enumerate(cexp):
                z *= np.exp(e * (base_radii[j] + 1j * phases[j]))
            total += z
        return total

    return P, terms


def fiber_sample(s, tri, lam, t, cutoffs, phase_grid=16):
    """Sample the torus fiber over a boundary point.

    For each base phase tuple the fiber equation fixes the product of the
    trailing coordinates; the unique interval point with that product is
    found by monotone bisection, the remaining phases run over the grid.
    Base tuples whose polynomial value falls under the discriminant
    threshold are recorded, not sampled.
    """
    w = cutoffs.w
    sf = tuple(float(x) for x in s)
    cell, _ = w.locate(tuple(Fraction(x) for x in s))
    active, rho = _active_cell(tri, cutoffs, sf)
    chart = tau_chart(tri, active)
    n = tri.config.polytope.ambient_dim
    k, l = chart.k, chart.l
    base_radii = _face_radii(tri, lam, t, chart, s)
    P, _ = _poly_on_base(tri, lam, t, cutoffs, chart, active, rho, base_radii)
    E = np.array(chart.rows, dtype=float)
    omega_ref = np.array(tri.config.points[tri.config.origin_index],
                         dtype=float) - np.array(chart.reference, dtype=float)

    thetas_interval = np.linspace(float(MINI_COPY_SCALE), 0.999, 64)
    R_interval = interval_radii(tri, lam, t, sf, thetas_interval)
    log_products = R_interval @ omega_ref  # <0-Omega, r> = log prod of tails

    base_tuples = _phase_tuples(phase_grid, l)
    free_tuples = _phase_tuples(phase_grid, n - l - 1)
    points = []
    degenerate = []
    for Y in base_tuples:
        val = P(Y)
        if abs(val) < DISCRIMINANT_TOL:
            degenerate.append(Y)
            continue
        target = float(np.log(abs(val)))
        r_x = _interval_point_with_product(
            tri, lam, t, sf, omega_ref, thetas_interval, log_products, target)
        if r_x is None:
            raise NumericalError(
                f"no interval point with tail product {target:.3g}; "
                f"bracket is [{log_products.min():.3g}, {log_products.max():.3g}]")
        r_y = E @ r_x
        for free in free_tuples:
            phases = list(Y) + [0.0] * (n - l)
            for j, ph in enumerate(free):
                phases[l + j] = ph
            phases[n - 1] = float(np.angle(val)) - sum(phases[l:n - 1])
            phases = [float(p % (2 * np.pi)) for p in phases]
            points.append(TorusPoint(tuple(float(v) for v in r_y),
                                     tuple(phases), chart=f"tau{chart.tau}"))
    return FiberSample(cell, active, chart, tuple(points),
                       tuple(degenerate), base_radii)


def _phase_tuples(resolution, count):
    if count <= 0:
        return [()]
    axis = np.linspace(0.0, 2.0 * np.pi, resolution, endpoint=False)
    out = [()]
    for _ in range(count):
        out = [t + (float(a),) for t in out for a in axis]
    return out


def _interval_point_with_product(tri, lam, t, s, omega_ref, thetas, logp,
                                 target, steps=80):
    """Bisection for the interval parameter whose tail-radius product matches
    the target (log scale); the product decreases toward the boundary."""
    if not (logp.min() - 1e-9 <= target <= logp.max() + 1e-9):
        return None
    idx = np.where((logp[:-1] - target) * (logp[1:] - target) <= 0)[0]
    if len(idx) == 0:
        return None
    lo, hi = float(thetas[idx[0]]), float(thetas[idx[0] + 1])
    f_lo = logp[idx[0]] - target
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        R = interval_radii(tri, lam, t, s, [mid])
        f_mid = float(R[0] @ omega_ref) - target
        if abs(f_mid) < SECTION_TOL:
            return R[0]
        if (f_mid > 0) == (f_lo > 0):
            lo = mid
            f_lo = f_mid
        else:
            hi = mid
    return interval_radii(tri, lam, t, s, [0.5 * (lo + hi)])[0]


def count_discriminant_points(s, tri, lam, t, cutoffs, base_grid=4096):
    """Number of degenerate base phases over one period of the leading
    coordinate (rank-1 charts), by minima detection with x4 refinement."""
    sf = tuple(float(x) for x in s)
    active, rho = _active_cell(tri, cutoffs, sf)
    chart = tau_chart(tri, active)
    if chart.k != 1:
        raise DomainError("discriminant counting expects a rank-1 base")
    base_radii = _face_radii(tri, lam, t, chart, s)
    P, terms = _poly_on_base(tri, lam, t, cutoffs, chart, active, rho,
                             base_radii)
    count, _ = _count_circle_zeros(lambda th: abs(P((th,))), base_grid)
    model_count = _degree_one_model_count(terms, base_radii, base_grid)
    return count, model_count


def _count_circle_zeros(f, grid):
    thetas = np.linspace(0.0, 2.0 * np.pi, grid, endpoint=False)
    vals = np.array([f(th) for th in thetas])
    scale = vals.max()
    count = 0
    minima = []
    for i in range(grid):
        prev_v, next_v = vals[i - 1], vals[(i + 1) % grid]
        if vals[i] <= prev_v and vals[i] < next_v:
            minima.append(i)
    for i in minima:
        lo = thetas[i] - 2 * np.pi / grid
        hi = thetas[i] + 2 * np.pi / grid
        best = vals[i]
        width = hi - lo
        while best >= DISCRIMINANT_TOL and width > 1e-15:
            sub = np.linspace(lo, hi, 9)
            sv = np.array([f(th) for th in sub])
            j = int(np.argmin(sv))
            best = sv[j]
            width /= 4.0
            lo, hi = sub[j] - width / 2, sub[j] + width / 2
        if best < DISCRIMINANT_TOL:
            count += 1
    return count, scale


def _degree_one_model_count(terms, base_radii, grid):
    """Zero count for the degree-one model: the same two coefficients on
    exponents 0 and 1 of the covering coordinate."""
    consts = [coeff for cexp, coeff in terms if not any(cexp)]
    lins = [(cexp, coeff) for cexp, coeff in terms if any(cexp)]
    if len(consts) != 1 or len(lins) != 1:
        raise DomainError("degree-one model expects a binomial base equation")
    a = consts[0]
    cexp, b_coeff = lins[0]
    d = abs(cexp[0])
    # |z| on the model circle equals the covered coordinate's radius^d
    rz = float(np.exp(d * base_radii[0])) * abs(b_coeff)

    def model(th):
        return abs(a + rz * np.exp(1j * th))

    count, _ = _count_circle_zeros(model, grid)
    return count


# ---------------------------------------------------------------------------
# the chi deformation family


class ChiFamily:
    """Per-simplex affine supports chi_tau and the glued interpolation
    chi(s, gamma, omega).

    chi_tau is affine on the configuration, equal to the lift exactly on
    tau and the origin and strictly above it elsewhere (found by the same
    exact feasibility core as the lift search).  The glued function stays
    affine in omega by construction, which is what makes the deformation
    substitution a well-defined monomial map.
    """

    def __init__(self, tri, lam, cutoffs):
        self.tri = tri
        self.lift = lam
        self.cutoffs = cutoffs
        self.config = tri.config
        self.chi_tau = {}
        for tau in tri.boundary().simplices:
            self.chi_tau[tau] = _chi_affine(tri, lam, tau)
        self._sigma_assignment()

    def _sigma_assignment(self):
        """alpha partition: each Bar^2 hat goes to a maximal boundary simplex
        containing the top of its chain, so the support stays inside the
        union of the cells of that simplex's faces."""
        w = self.cutoffs.w
        bar2 = w.bar2
        maximal = self.tri.boundary().maximal
        assign = []
        for chain in bar2.vertex_labels:
            top = tuple(sorted(chain[-1]))
            sigma = min(s for s in maximal if set(top) <= set(s))
            assign.append(sigma)
        self._vertex_sigma = tuple(assign)

    def alpha_values(self, s):
        """Mapping sigma -> alpha_sigma(s) (floats summing to 1)."""
        c = self.cutoffs
        pt = np.append(np.asarray(s, dtype=float), 1.0)
        best = None
        for mi, (m, A) in enumerate(c._mats):
            bary = m @ pt
            resid = float(np.max(np.abs(A @ bary - pt)))
            worst = bary.min() - resid
            if best is None or worst > best[0]:
                best = (worst, mi, bary)
            if worst >= 0:
                break
        worst, mi, bary = best
        if worst < -1e-9:
            raise DomainError(f"point {s} is not on the boundary")
        bary = np.clip(bary, 0.0, None)
        bary /= bary.sum()
        out = {}
        for b, vi in zip(bary, c._verts[mi]):
            sigma = self._vertex_sigma[vi]
            out[sigma] = out.get(sigma, 0.0) + float(b)
        return out

    def _chi_sigma_rep(self, hats, gamma, sigma):
        """Affine representation (constant, gradient) of chi_sigma(s,gamma,.)
        from its values on the simplex and the origin."""
        config = self.config
        o = config.origin_index
        support = (o,) + sigma
        vals = []
        for i in support:
            omega = config.points[i]
            acc = 0.0
            for tau, r0 in hats.items():
                if r0 <= 0.0:
                    continue
                c, d = self.chi_tau[tau]
                chi_val = float(c) + sum(float(dj) * wj
                                         for dj, wj in zip(d, omega))
                acc += r0 * np.exp(-gamma * chi_val)
            vals.append(-np.log(acc))
        pts = [config.points[i] for i in support]
        A = np.array([[1.0] + [float(x) for x in p] for p in pts])
        sol = np.linalg.solve(A, np.array(vals))
        return float(sol[0]), sol[1:]

    def rep(self, s, gamma):
        """Affine representation of chi(s, gamma, .) in omega."""
        hats = self.cutoffs.hat_values(s)
        alphas = self.alpha_values(s)
        c_total, d_total = 0.0, np.zeros(self.config.polytope.ambient_dim)
        for sigma, a in alphas.items():
            if a <= 0.0:
                continue
            c, d = self._chi_sigma_rep(hats, gamma, sigma)
            c_total += a * c
            d_total += a * d
        return c_total, d_total

    def value(self, s, gamma, omega):
        c, d = self.rep(s, gamma)
        return c + float(np.dot(d, np.asarray(omega, dtype=float)))

    def epsilon(self, s, gamma):
        """Vector of e^(gamma*lift - chi) - rho over the configuration."""
        rho = self.cutoffs.rho_all(s)
        c, d = self.rep(s, gamma)
        out = np.zeros(len(self.config))
        for i, omega in enumerate(self.config.points):
            chi = c + float(np.dot(d, np.asarray(omega, dtype=float)))
            out[i] = np.exp(gamma * float(self.lift[i]) - chi) - rho[i]
        return out

    def sample_points(self):
        """Deterministic boundary sample: the support centroids of every cell."""
        pts = []
        for tau in self.tri.boundary().simplices:
            pts.extend(self.cutoffs.w.cell_support_points(tau))
        return [tuple(float(x) for x in p) for p in pts]

    def epsilon_max(self, gamma, samples=None):
        samples = samples if samples is not None else self.sample_points()
        return max(float(np.max(np.abs(self.epsilon(s, gamma))))
                   for s in samples)

    def base_checks(self, gamma=5.0, tol=1e-12):
        """gamma = 0 collapses to zero; the origin value is gamma*lift(0)."""
        o = self.config.origin_index
        lam0 = float(self.lift[o])
        worst0, worst_org = 0.0, 0.0
        for s in self.sample_points():
            for i, omega in enumerate(self.config.points):
                worst0 = max(worst0, abs(self.value(s, 0.0, omega)))
            worst_org = max(worst_org,
                            abs(self.value(s, gamma, self.config.points[o])
                                - gamma * lam0))
        return worst0 <= tol, worst_org <= tol, worst0, worst_org


def _chi_affine(tri, lam, tau):
    """Affine support function of a boundary simplex: equal to the lift on
    the simplex and the origin, strictly above elsewhere.  Exact rationals;
    reuses the max-min-slack core on the homogenized residual system."""
    config = tri.config
    o = config.origin_index
    support = [o] + list(tau)
    n = config.polytope.ambient_dim
    rows = [[Fraction(1)] + [Fraction(x) for x in config.points[i]]
            for i in support]
    rhs = [lam[i] for i in support]
    particular, null = _affine_solution_space(rows, rhs, n + 1)
    others = [i for i in range(len(config)) if i not in support]
    if not others:
        return particular[0], tuple(particular[1:])
    sys = SlackSystem(1 + len(null))
    for i in others:
        ev = [Fraction(1)] + [Fraction(x) for x in config.points[i]]
        row = {0: sum(p * e for p, e in zip(particular, ev)) - lam[i]}
        for j, nv in enumerate(null):
            row[1 + j] = sum(nj * e for nj, e in zip(nv, ev))
        sys.add(row, ("chi-point", i))
    sys.add({0: Fraction(1)}, ("chi-scale", tau))
    _, sol = sys.solve()
    u = sol[0]
    coeffs = [u * p for p in particular]
    for j, nv in enumerate(null):
        coeffs = [c + sol[1 + j] * nj for c, nj in zip(coeffs, nv)]
    coeffs = [c / u for c in coeffs]
    # exactness guard: equalities on the support
    for i in support:
        ev = [Fraction(1)] + [Fraction(x) for x in config.points[i]]
        assert sum(c * e for c, e in zip(coeffs, ev)) == lam[i]
    return coeffs[0], tuple(coeffs[1:])


def _affine_solution_space(rows, rhs, nvars):
    """Particular solution and nullspace basis of an underdetermined exact
    system (rows have nvars columns, full row rank)."""
    from .linalg import nullspace as _ns
    m = len(rows)
    sel = []
    for j in range(nvars):
        cols = [[rows[i][jj] for jj in sel + [j]] for i in range(m)]
        if mat_rank(cols) > len(sel):
            sel.append(j)
        if len(sel) == m:
            break
    sub = [[rows[i][j] for j in sel] for i in range(m)]
    sol_sel = solve_linear(sub, rhs)
    particular = [Fraction(0)] * nvars
    for j, v in zip(sel, sol_sel):
        particular[j] = v
    null = _ns(rows)
    return particular, null


# ---------------------------------------------------------------------------
# deformation bridge


@dataclass(frozen=True)
class SubstitutionRecord:
    point_index: int
    exponent_terms: tuple     # symbolic terms after cancellation
    target_exponent: tuple
    exact_match: bool
    float_residual: float


@dataclass(frozen=True)
class BridgeReport:
    epsilon_by_gamma: dict
    substitution: tuple
    gamma_zero_identity: bool   # at gamma=0 the deviation is 1 - rho pointwise


def deformation_bridge_check(tri, lam, t, cutoffs, chi, gammas=(2.0, 10.0),
                             samples=None):
    """Uniform smallness of the deformation and the exact substitution
    algebra.

    The deformed coefficient of a monomial is e^(gamma*lift - chi); the
    substitution multiplies it back by e^chi, so the chi terms cancel as
    affine-function symbols and the coefficient becomes e^(gamma*lift)
    times the family coefficient, exactly the rescaled family.
    """
    eps = {g: chi.epsilon_max(g, samples) for g in gammas}
    gamma = Fraction(gammas[-1]) if gammas else Fraction(1)
    subs = []
    s0 = chi.sample_points()[0]
    c, d = chi.rep(s0, float(gamma))
    for i in range(len(tri.config)):
        terms = (("lift", gamma * lam[i]), ("chi", i, -1), ("chi", i, +1))
        cancelled = _cancel_chi(terms)
        target = (("lift", gamma * lam[i]),)
        chi_val = c + float(np.dot(d, np.asarray(tri.config.points[i],
                                                 dtype=float)))
        g = float(gamma)
        lhs = np.exp(g * float(lam[i]) - chi_val) * np.exp(chi_val)
        rhs = np.exp(g * float(lam[i]))
        subs.append(SubstitutionRecord(
            i, cancelled, target, cancelled == target,
            abs(lhs - rhs) / max(abs(rhs), 1e-300)))
    rho0_dev = True
    for s in (samples or chi.sample_points())[:4]:
        rho = cutoffs.rho_all(s)
        dev = chi.epsilon(s, 0.0)
        if not np.allclose(dev, 1.0 - rho, atol=1e-9):
            rho0_dev = False
    return BridgeReport(eps, tuple(subs), rho0_dev)


def _cancel_chi(terms):
    counts = {}
    out = []
    for term in terms:
        if term[0] == "chi":
            key = term[:2]
            counts[key] = counts.get(key, 0) + term[2]
        else:
            out.append(term)
    for key, c in sorted(counts.items()):
        if c != 0:
            out.append(key + (c,))
    return tuple(out)
