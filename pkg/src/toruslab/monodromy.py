"""Monodromy by section translation and the mirror fiber-lattice duality.

The translation data is exact: the cellwise representative of the dual map
is the rational center of the dual face, so the per-monomial phases are
rational numbers, integral on the cell's own monomials at integral gamma
(which is precisely what makes the twisted section well defined).
"""

from dataclasses import dataclass
from fractions import Fraction

from .basecomplex import DualPolytope, _centroid
from .errors import DomainError
from .linalg import dot, integer_kernel, lattice_basis, mat_det, saturation, \
    solve_linear, vec_sub


@dataclass(frozen=True)
class TranslationDatum:
    cell: tuple              # boundary simplex tau
    nu_point: tuple          # exact center of the dual face
    pairings: tuple          # (point index, <nu', omega - 0>) over the cell
    tight: bool              # pairings equal gamma * lift difference exactly
    integral: bool           # all cell pairings are integers (monomials fixed)


def translation_data(tri, lam, gamma=1):
    """Per-cell translation phases of the twisted section.

    For every boundary simplex the dual-face center pairs with the cell's
    monomials exactly as gamma times the lift differences; at integral
    values the translation fixes the cell's defining monomials, which is
    the well-definedness of the monodromy section.
    """
    gamma = Fraction(gamma)
    dual = DualPolytope(tri, lam, gamma)
    config = tri.config
    o = config.origin_index
    out = []
    for tau in tri.boundary().simplices:
        center = dual.dual_face_center(tau)
        pairings = []
        tight = True
        integral = True
        for i in tau:
            val = dot(center, vec_sub(config.points[i], config.points[o]))
            expected = gamma * (lam[i] - lam[o])
            pairings.append((i, val))
            tight = tight and (val == expected)
            integral = integral and (val.denominator == 1)
        if not tight:
            raise AssertionError(
                f"tightness certificate failed on cell {tau}")
        out.append(TranslationDatum(tau, center, tuple(pairings),
                                    tight, integral))
    return out


def dehn_twist_count(tri):
    """Total twist of the 2d monodromy: one unit per boundary vertex region.

    The unit twist per vertex region generalizes the three-region count of
    the plane cubic; reports carry the per-region breakdown.
    """
    n = tri.config.polytope.ambient_dim
    if n != 2:
        raise DomainError("Dehn twist counting is the N = 2 monodromy model")
    regions = tri.boundary().simplices_of_dim(0)
    return len(regions), tuple(v[0] for v in regions)


def monodromy_matrix_2d(tri):
    """Unipotent action on (fiber class, section class): upper triangular
    with the twist count off the diagonal."""
    count, _ = dehn_twist_count(tri)
    return ((1, count), (0, 1))


def is_unipotent(matrix):
    (a, b), (c, d) = matrix
    m = ((a - 1, b), (c, d - 1))
    sq = ((m[0][0] * m[0][0] + m[0][1] * m[1][0],
           m[0][0] * m[0][1] + m[0][1] * m[1][1]),
          (m[1][0] * m[0][0] + m[1][1] * m[1][0],
           m[1][0] * m[0][1] + m[1][1] * m[1][1]))
    return all(v == 0 for row in sq for v in row)


@dataclass(frozen=True)
class FiberLatticeDecomposition:
    cell: tuple
    base_rank: int            # rank of the quotient torus factor
    fiber_rank: int           # rank of the dual-face torus factor
    tau_basis: tuple          # saturated direction lattice of the simplex
    tau_vee_basis: tuple      # annihilator lattice of the cell's span
    pairing_unimodular: bool  # the quotient pairing is perfect
    dual_swap: tuple          # ranks of the dual fiber's two summands


def fiber_lattice_decomposition(tri, tau):
    """Lattice data of the torus fiber over a cell and of its dual fiber.

    The fiber splits (non-canonically) as the quotient torus of the
    simplex's direction lattice plus the dual-face torus; the dual fiber
    swaps the two summands' roles.
    """
    config = tri.config
    n = config.polytope.ambient_dim
    tau = tuple(sorted(tau))
    if tau not in tri.boundary().simplices:
        raise DomainError(f"{tau} is not a boundary simplex")
    pts = [config.points[i] for i in tau]
    k = len(tau) - 1
    from .lattice import _simplex_lattice_points
    direction = [vec_sub(p, pts[0])
                 for p in _simplex_lattice_points([tuple(p) for p in pts])]
    tau_sat = saturation(direction) if k else ()
    span_rows = [config.points[i] for i in tau]  # affine span through origin
    tau_vee = tuple(integer_kernel(span_rows))
    if len(tau_vee) != n - 1 - k:
        raise AssertionError("dual-face lattice has unexpected rank")
    pairing_ok = True
    if k:
        # a perfect pairing: some integral dual family hits the identity
        # matrix against the saturated basis
        duals = []
        for i in range(k):
            rhs = [1 if j == i else 0 for j in range(k)]
            sol = solve_linear(
                [[tau_sat[j][c] for c in range(n)][:k] if False else
                 [tau_sat[j][c] for c in range(n)] for j in range(k)][:k] or
                [[0]], rhs) if False else None
        # direct construction: solve <u, b_j> = delta_ij over a column basis
        duals = _dual_family(tau_sat, n)
        pairing = [[dot(u, b) for b in tau_sat] for u in duals]
        pairing_ok = abs(mat_det(pairing)) == 1
    return FiberLatticeDecomposition(
        tau, k, n - 1 - k, tuple(tau_sat), tau_vee, pairing_ok,
        (n - 1 - k, k))


def _dual_family(basis_rows, n):
    """Integral functionals pairing to the identity with a saturated basis."""
    from .linalg import complete_to_unimodular, mat_inverse_int
    full = complete_to_unimodular(list(basis_rows), n)
    inv = mat_inverse_int(full)
    # columns of the inverse pair with the rows of `full` as delta
    cols = [tuple(inv[r][i] for r in range(n)) for i in range(len(basis_rows))]
    return cols


@dataclass(frozen=True)
class KahlerClassVector:
    gamma: Fraction
    coefficients: tuple       # (boundary vertex index, -gamma * lift diff)

    def values(self):
        return tuple(v for _, v in self.coefficients)

    def all_positive(self):
        return all(v > 0 for _, v in self.coefficients)


def kahler_class(tri, lam, gamma=1):
    """Coefficient vector of the mirror symplectic class on the divisors
    indexed by the boundary vertices of the triangulation."""
    gamma = Fraction(gamma)
    if gamma <= 0:
        raise DomainError("gamma must be positive")
    o = tri.config.origin_index
    coeffs = []
    for (i,) in tri.boundary().simplices_of_dim(0):
        coeffs.append((i, -gamma * (lam[i] - lam[o])))
    return KahlerClassVector(gamma, tuple(coeffs))
