"""Central coherent triangulations of (Delta, A) and their lift machinery.

A central triangulation has every maximal simplex coned over the origin, so
its combinatorics is the fan over the induced boundary triangulation.  Lifts
live on the point configuration A; the secondary-cone test is the local wall
criterion together with domination at unused points.
"""

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from math import lcm

from .errors import DomainError
from .lattice import normalized_volume
from .linalg import affine_coordinates, dot, mat_det, mat_rank, vec_sub
from .lp import SlackSystem


class LiftVector:
    """Integer (or rational) heights indexed by the points of A."""

    def __init__(self, values):
        self.values = tuple(Fraction(v) for v in values)

    @classmethod
    def from_pairs(cls, config, pairs):
        vals = [Fraction(0)] * len(config)
        for i, v in pairs:
            vals[i] = Fraction(v)
        return cls(vals)

    def __getitem__(self, i):
        return self.values[i]

    def __len__(self):
        return len(self.values)

    def is_integral(self):
        return all(v.denominator == 1 for v in self.values)

    def scaled_integral(self):
        """Clear denominators; membership in the open cone is scale invariant."""
        mult = lcm(*[v.denominator for v in self.values]) if self.values else 1
        return LiftVector([int(v * mult) for v in self.values])

    def __repr__(self):
        vals = [int(v) if v.denominator == 1 else v for v in self.values]
        return f"LiftVector({vals})"


class CentralTriangulation:
    """Triangulation of (Delta, A) whose maximal simplices all contain {0}.

    `max_simplices` are sorted index tuples into config.points; walls are the
    interior ridges (all of which contain the origin) with their two adjacent
    simplices and opposite vertices.
    """

    def __init__(self, config, max_simplices, require_central=True):
        self.config = config
        poly = config.polytope
        n = poly.ambient_dim
        simps = sorted(tuple(sorted(s)) for s in max_simplices)
        if len(set(simps)) != len(simps):
            raise DomainError("duplicate maximal simplices")
        o = config.origin_index
        pts = config.points
        total = 0
        for s in simps:
            if len(s) != n + 1:
                raise DomainError(f"simplex {s} does not have {n + 1} vertices")
            if require_central and o not in s:
                raise DomainError(f"maximal simplex {s} does not contain the origin")
            vol = abs(int(mat_det([vec_sub(pts[i], pts[s[0]]) for i in s[1:]])))
            if vol == 0:
                raise DomainError(f"degenerate simplex {s}")
            total += vol
        dvol = _nvol_points(poly.vertices)
        if total != dvol:
            raise DomainError(
                f"simplices cover volume {total}, polytope has {dvol}")
        self.max_simplices = tuple(simps)
        self._check_facets_and_build_walls()
        self._boundary = None

    def _check_facets_and_build_walls(self):
        poly = self.config.polytope
        pts = self.config.points
        facet_count = {}
        for s in self.max_simplices:
            for drop in s:
                f = tuple(i for i in s if i != drop)
                facet_count.setdefault(f, []).append((s, drop))
        walls = []
        for f, owners in sorted(facet_count.items()):
            on_boundary = any(
                all(dot(u, pts[i]) == c for i in f) for u, c in poly.facets())
            if on_boundary:
                if len(owners) != 1:
                    raise DomainError(f"boundary ridge {f} shared by {len(owners)} simplices")
            else:
                if len(owners) != 2:
                    raise DomainError(f"interior ridge {f} owned by {len(owners)} simplices")
                (s1, v1), (s2, v2) = owners
                walls.append(Wall(f, s1, v1, s2, v2))
        self.walls = tuple(walls)

    def t_vertices(self):
        """Indices of A-points used as vertices of the triangulation."""
        used = set()
        for s in self.max_simplices:
            used.update(s)
        return tuple(sorted(used))

    def boundary(self):
        """The induced boundary complex: all faces of max simplices minus {0}."""
        if self._boundary is None:
            o = self.config.origin_index
            maximal = sorted(tuple(i for i in s if i != o)
                             for s in self.max_simplices)
            self._boundary = BoundaryComplex(self.config, maximal)
        return self._boundary

    def locate(self, m):
        """Max simplices whose convex hull contains a rational point m."""
        pts = self.config.points
        hits = []
        for s in self.max_simplices:
            coords = affine_coordinates([pts[i] for i in s], m)
            if coords is not None and all(c >= 0 for c in coords):
                hits.append((s, coords))
        return hits

    def __repr__(self):
        return (f"CentralTriangulation({len(self.max_simplices)} simplices "
                f"on {len(self.config)} points)")


@dataclass(frozen=True)
class Wall:
    ridge: tuple          # shared codim-1 face (contains the origin index)
    simplex1: tuple
    opposite1: int        # vertex of simplex1 not on the ridge
    simplex2: tuple
    opposite2: int


class BoundaryComplex:
    """Simplicial complex on the boundary: the link of the origin in T."""

    def __init__(self, config, maximal):
        self.config = config
        self.maximal = tuple(sorted(tuple(sorted(s)) for s in maximal))
        faces = set()
        for s in self.maximal:
            for k in range(1, len(s) + 1):
                faces.update(combinations(s, k))
        self.simplices = tuple(sorted(faces, key=lambda f: (len(f), f)))

    def simplices_of_dim(self, d):
        return tuple(f for f in self.simplices if len(f) == d + 1)

    @property
    def dim(self):
        return max(len(s) for s in self.maximal) - 1

    def vertex_indices(self):
        return self.simplices_of_dim(0)

    def minimal_face_of(self, simplex):
        """The minimal face of Delta containing the simplex (its carrier)."""
        poly = self.config.polytope
        pts = [self.config.points[i] for i in simplex]
        for face in poly.face_lattice():  # sorted by dim: first hit is minimal
            if face.dim == poly.ambient_dim:
                return face
            u, c = face.normal, face.offset
            if all(dot(u, p) == c for p in pts):
                return face
        raise AssertionError("face lattice lacks a top element")

    def __repr__(self):
        return f"BoundaryComplex({len(self.maximal)} maximal simplices)"


def _nvol_points(points):
    """Normalized (d!) volume of conv(points) in the lattice of its affine
    hull, by recursive pyramid decomposition over the facets.

    d! vol(pyramid over F) = lattice height of the apex over F times
    (d-1)! vol(F), with the facet re-expressed in its saturated lattice.
    """
    from .lattice import _facet_inequalities
    from .linalg import saturation
    pts = [tuple(p) for p in points]
    base = pts[0]
    diffs = [vec_sub(p, base) for p in pts[1:]]
    d = mat_rank(diffs)
    if d < len(base):
        sat = saturation(diffs)
        pts = [_int_coords(vec_sub(p, base), sat) for p in pts]
        base = pts[0]
    if len(set(pts)) == d + 1:
        uniq = sorted(set(pts))
        return abs(int(mat_det([vec_sub(p, uniq[0]) for p in uniq[1:]])))
    total = 0
    for u, c in _facet_inequalities(pts):
        height = dot(u, base) - c
        if height == 0:
            continue
        tight = [p for p in pts if dot(u, p) == c]
        total += height * _nvol_points(tight)
    return total


def _int_coords(vector, basis_rows):
    from .lattice import _coords_in_basis
    return tuple(int(x) for x in _coords_in_basis(vector, basis_rows))


def build_central_triangulation(config, strategy="vertex_only"):
    """Construct a central triangulation of (Delta, A).

    vertex_only cones the facets of Delta (which must be simplices);
    placing additionally inserts the non-vertex boundary points of A in
    lexicographic order by stellar subdivision before coning.
    """
    poly = config.polytope
    n = poly.ambient_dim
    boundary = []
    for f in poly.faces_of_dim(n - 1):
        if len(f.vertex_indices) != n:
            raise DomainError(
                f"facet with vertices {f.vertex_indices} is not a simplex; "
                "vertex_only/placing construction does not apply")
        boundary.append(tuple(sorted(
            config.index_of(poly.vertices[i]) for i in f.vertex_indices)))
    if strategy == "placing":
        vert_idx = {config.index_of(v) for v in poly.vertices}
        extra = [i for i in config.boundary_indices() if i not in vert_idx]
        for p in sorted(extra, key=lambda i: config.points[i]):
            boundary = _stellar_insert(config, boundary, p)
    elif strategy != "vertex_only":
        raise DomainError(f"unknown strategy {strategy!r}")
    o = config.origin_index
    simps = [tuple(sorted((o,) + s)) for s in boundary]
    return CentralTriangulation(config, simps)


def _stellar_insert(config, boundary, p):
    pts = config.points
    target = pts[p]
    new = []
    minimal_face = None
    # minimal face = the support of the barycentric coordinates in any
    # containing simplex
    for s in boundary:
        coords = affine_coordinates([pts[i] for i in s], target)
        if coords is None or any(c < 0 for c in coords):
            continue
        face = tuple(i for i, c in zip(s, coords) if c > 0)
        if minimal_face is None or len(face) < len(minimal_face):
            minimal_face = face
    if minimal_face is None:
        raise DomainError(f"point index {p} lies outside the boundary complex")
    fset = set(minimal_face)
    for s in boundary:
        if fset <= set(s):
            for v in minimal_face:
                repl = tuple(sorted([p] + [i for i in s if i != v]))
                new.append(repl)
        else:
            new.append(s)
    return sorted(set(new))


def characteristic_eval(tri, lam, m):
    """Value of the T-piecewise-linear extension of the lift at a rational point."""
    hits = tri.locate(tuple(Fraction(x) for x in m))
    if not hits:
        raise DomainError(f"point {m} lies outside the polytope")
    s, coords = hits[0]
    return sum(c * lam[i] for c, i in zip(coords, s))


def secondary_cone_system(tri):
    """Strict inequalities cutting out the open secondary cone at T.

    Rows are functionals on R^A: wall convexity (the affine extension from
    one side exceeds the lift at the opposite vertex of the other side) and
    strict domination at A-points that are not vertices of T.
    """
    config = tri.config
    pts = config.points
    pinned = tri.max_simplices[0]
    sys = SlackSystem(len(config), pinned=pinned)
    for w in tri.walls:
        base = [pts[i] for i in w.simplex1]
        coords = affine_coordinates(base, pts[w.opposite2])
        row = {i: Fraction(c) for i, c in zip(w.simplex1, coords)}
        row[w.opposite2] = row.get(w.opposite2, Fraction(0)) - 1
        sys.add(row, ("wall", w.ridge))
    used = set(tri.t_vertices())
    for i in range(len(config)):
        if i in used:
            continue
        hits = tri.locate(pts[i])
        s, coords = hits[0]
        row = {j: Fraction(c) for j, c in zip(s, coords)}
        row[i] = row.get(i, Fraction(0)) - 1
        sys.add(row, ("point", i))
    return sys


def secondary_cone_contains(tri, lam):
    """Interior-of-secondary-cone membership, with the violated rows."""
    sys = secondary_cone_system(tri)
    values = sys.evaluate(lam.values)
    violations = [(lbl, v) for lbl, v in zip(sys.labels, values) if v <= 0]
    return len(violations) == 0, violations


def find_interior_lambda(tri):
    """Search an integral lift strictly convex for T.

    Maximizes the minimum wall/domination slack (bounded by 1) with the
    exact feasibility core, then clears denominators.  Raises
    InfeasibleError carrying the dual certificate when T is not coherent.
    """
    sys = secondary_cone_system(tri)
    _, sol = sys.solve()
    lam = LiftVector(sol).scaled_integral()
    ok, violations = secondary_cone_contains(tri, lam)
    if not ok:
        raise AssertionError(f"feasibility core returned a non-interior lift: {violations}")
    return lam


def covering_degree(tri, boundary_simplex):
    """Degree of the monomial covering over a boundary simplex: its
    normalized volume in the lattice generated by its integral points."""
    pts = [tri.config.points[i] for i in boundary_simplex]
    return normalized_volume(pts)


@dataclass(frozen=True)
class UpperFace:
    point_indices: tuple     # all A-indices whose lifts are tight
    normal: tuple            # inner normal in Z^(N+1)
    offset: int


@dataclass(frozen=True)
class BijectionReport:
    ok: bool
    missing: tuple           # T-simplices with no matching upper face
    extra: tuple             # upper-face projections not simplices of T


class ExtendedPolytope:
    """Convex hull of the lifted configuration (omega, lam(omega)) in Z^(N+1).

    The upper boundary is the graph of the characteristic function; with a
    strictly convex lift its faces project bijectively onto the maximal
    simplices of the triangulation.
    """

    def __init__(self, config, lam):
        if not lam.is_integral():
            raise DomainError("extended hull requires an integral lift")
        pts = config.points
        self.config = config
        self.lift = lam
        lifted = [p + (int(lam[i]),) for i, p in enumerate(pts)]
        self.lifted_points = tuple(lifted)
        from .lattice import _facet_inequalities
        upper, lower = [], []
        for u, c in _facet_inequalities(lifted):
            tight = tuple(i for i, q in enumerate(lifted) if dot(u, q) == c)
            face = UpperFace(tight, u, c)
            # inner normal with negative last coordinate => outward points up
            if u[-1] < 0:
                upper.append(face)
            elif u[-1] > 0:
                lower.append(face)
        self.upper_faces = tuple(sorted(upper, key=lambda f: f.point_indices))
        self.lower_faces = tuple(sorted(lower, key=lambda f: f.point_indices))
        o = config.origin_index
        tight_at_origin = [f for f in self.upper_faces if o in f.point_indices]
        from .linalg import mat_rank
        self.origin_lift_is_vertex = (
            mat_rank([f.normal for f in tight_at_origin])
            == config.polytope.ambient_dim + 1) if tight_at_origin else False

    def projection_simplices(self):
        return tuple(sorted(f.point_indices for f in self.upper_faces))

    def bijection_with(self, tri):
        proj = set(self.projection_simplices())
        tsx = set(tri.max_simplices)
        missing = tuple(sorted(tsx - proj))
        extra = tuple(sorted(proj - tsx))
        return BijectionReport(not missing and not extra, missing, extra)


def extended_upper_hull(config, lam, tri=None):
    """Build the extended polytope; optionally report the face/simplex
    bijection against a triangulation (failures are reported, not raised)."""
    ext = ExtendedPolytope(config, lam)
    if tri is not None:
        ext.bijection = ext.bijection_with(tri)
    return ext
