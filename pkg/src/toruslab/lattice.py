"""Exact lattice-polytope kernel: faces, polarity, reflexivity, Delzant
nonsingularity and normalized volumes.

All geometry in this module is exact (ints and Fractions).  The supported
envelope is ambient dimension <= 4 with <= 50 vertices; anything larger
raises ResourceError rather than silently grinding.
"""

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from math import lcm

from .errors import DomainError, ResourceError
from .linalg import (
    dot,
    lattice_basis,
    mat_det,
    mat_rank,
    nullspace,
    primitive,
    saturation,
    solve_linear,
    vec_sub,
)

MAX_DIM = 4
MAX_VERTICES = 50
MAX_BOX_POINTS = 2_000_000


@dataclass(frozen=True)
class Face:
    """A face of a lattice polytope, recorded by its tight vertex set.

    `normal`/`offset` give a supporting pair: <normal, m> >= offset on the
    polytope with equality exactly on the face.  For facets of a reflexive
    polytope the pair is primitive with offset -1.
    """

    vertex_indices: tuple
    dim: int
    normal: tuple
    offset: int


class LatticePolytope:
    """Full-dimensional lattice polytope given by its vertex list.

    Vertices are stored in lexicographic order; the input list must consist
    of exactly the extreme points (no duplicates, no interior points).
    """

    def __init__(self, vertices, origin=None):
        vertices = [tuple(int(x) for x in v) for v in vertices]
        if not vertices:
            raise DomainError("empty vertex list")
        n = len(vertices[0])
        if any(len(v) != n for v in vertices):
            raise DomainError("inconsistent vertex dimensions")
        if n > MAX_DIM:
            raise ResourceError(f"ambient dimension {n} exceeds supported {MAX_DIM}")
        if len(vertices) > MAX_VERTICES:
            raise ResourceError(
                f"{len(vertices)} vertices exceed supported {MAX_VERTICES}")
        if len(set(vertices)) != len(vertices):
            raise DomainError("duplicate vertices")
        diffs = [vec_sub(v, vertices[0]) for v in vertices[1:]]
        if mat_rank(diffs) != n:
            raise DomainError("polytope is not full-dimensional")
        self.ambient_dim = n
        self.origin = tuple(int(x) for x in (origin or (0,) * n))
        self._input_vertices = vertices
        self._facets = None
        self._faces = None
        self._points = None
        self._verify_extreme()
        self.vertices = tuple(sorted(self._input_vertices))

    def _verify_extreme(self):
        facets = self.facets()
        for v in self._input_vertices:
            tight = [u for u, c in facets if dot(u, v) == c]
            if mat_rank(tight) != self.ambient_dim:
                raise DomainError(f"vertex {v} is not an extreme point")

    # -- facets ---------------------------------------------------------

    def facets(self):
        """List of (primitive inner normal u, offset c) with <u,m> >= c."""
        if self._facets is None:
            self._facets = _facet_inequalities(self._input_vertices)
        return self._facets

    def contains(self, point):
        """Exact membership test for a rational point."""
        return all(dot(u, point) >= c for u, c in self.facets())

    def contains_interior(self, point):
        return all(dot(u, point) > c for u, c in self.facets())

    # -- face lattice ---------------------------------------------------

    def face_lattice(self):
        """All nonempty proper faces plus the polytope itself, graded by dim.

        Returns a list of Face records sorted by (dim, vertex_indices).
        """
        if self._faces is None:
            self._faces = self._build_faces()
        return self._faces

    def _build_faces(self):
        verts = self.vertices
        facet_sets = {}
        for u, c in self.facets():
            key = frozenset(i for i, v in enumerate(verts) if dot(u, v) == c)
            facet_sets[key] = (u, c)
        current = set(facet_sets)
        closure = set(facet_sets)
        while current:
            nxt = set()
            for a in current:
                for b in facet_sets:
                    ab = a & b
                    if ab and ab not in closure:
                        nxt.add(ab)
                        closure.add(ab)
            current = nxt
        faces = []
        for key in closure:
            pts = [verts[i] for i in sorted(key)]
            d = 0 if len(pts) == 1 else mat_rank(
                [vec_sub(p, pts[0]) for p in pts[1:]])
            normal = [0] * self.ambient_dim
            offset = 0
            for fs, (u, c) in facet_sets.items():
                if key <= fs:
                    normal = [a + b for a, b in zip(normal, u)]
                    offset += c
            faces.append(Face(tuple(sorted(key)), d, tuple(normal), offset))
        top = Face(tuple(range(len(verts))), self.ambient_dim,
                   (0,) * self.ambient_dim, 0)
        faces.append(top)
        faces.sort(key=lambda f: (f.dim, f.vertex_indices))
        return faces

    def faces_of_dim(self, d):
        return [f for f in self.face_lattice() if f.dim == d]

    def vertex_edges(self, vi):
        """Indices of edge-partner vertices of vertex index vi."""
        partners = []
        for f in self.faces_of_dim(1):
            if vi in f.vertex_indices:
                ends = [i for i in f.vertex_indices
                        if self.vertices[i] != self.vertices[vi]]
                # lattice points interior to the edge never appear here:
                # faces are recorded by extreme points only
                partners.extend(ends)
        return sorted(set(partners))

    # -- lattice points -------------------------------------------------

    def lattice_points(self):
        if self._points is None:
            self._points = enumerate_lattice_points(self)
        return self._points

    def boundary_lattice_points(self):
        return tuple(p for p in self.lattice_points()
                     if not self.contains_interior(p))

    def __eq__(self, other):
        return (isinstance(other, LatticePolytope)
                and self.vertices == other.vertices
                and self.origin == other.origin)

    def __hash__(self):
        return hash((self.vertices, self.origin))

    def __repr__(self):
        return (f"LatticePolytope(dim={self.ambient_dim}, "
                f"nvertices={len(self.vertices)})")


def _facet_inequalities(vertices):
    """Brute-force supporting-hyperplane enumeration over vertex subsets."""
    n = len(vertices[0])
    seen = {}
    for sub in combinations(range(len(vertices)), n):
        pts = [vertices[i] for i in sub]
        diffs = [vec_sub(p, pts[0]) for p in pts[1:]]
        ns = nullspace(diffs) if diffs else [(Fraction(1),)]
        if len(ns) != 1:
            continue
        denom = 1
        for x in ns[0]:
            denom = lcm(denom, x.denominator)
        u = primitive(tuple(int(x * denom) for x in ns[0]))
        if all(x == 0 for x in u):
            continue
        c = dot(u, pts[0])
        sides = [dot(u, v) - c for v in vertices]
        if all(s >= 0 for s in sides):
            seen[(u, c)] = True
        elif all(s <= 0 for s in sides):
            u = tuple(-x for x in u)
            seen[(u, -c)] = True
    return sorted(seen)


def enumerate_lattice_points(poly):
    """All integral points of the polytope, sorted lexicographically."""
    n = poly.ambient_dim
    los, his = [], []
    count = 1
    for j in range(n):
        lo = min(v[j] for v in poly.vertices)
        hi = max(v[j] for v in poly.vertices)
        los.append(lo)
        his.append(hi)
        count *= hi - lo + 1
        if count > MAX_BOX_POINTS:
            raise ResourceError(
                f"bounding box holds more than {MAX_BOX_POINTS} candidates")
    facets = poly.facets()
    out = []

    def scan(prefix, j):
        if j == n:
            out.append(tuple(prefix))
            return
        for x in range(los[j], his[j] + 1):
            scan(prefix + [x], j + 1)

    scan([], 0)
    return tuple(p for p in out if all(dot(u, p) >= c for u, c in facets))


@dataclass(frozen=True)
class PolarDual:
    """Polar polytope with exact rational vertices.

    `vertices` are tuples of Fractions in lexicographic order; `is_integral`
    is set when every coordinate is an integer.
    """

    vertices: tuple
    is_integral: bool

    def to_lattice_polytope(self):
        if not self.is_integral:
            raise DomainError("polar dual is not integral")
        return LatticePolytope([tuple(int(x) for x in v) for v in self.vertices])


def polar_dual(poly):
    """Polar polytope {u : <u, m - origin> >= -1 for all m}.

    Its vertices correspond to the facets of the input: the primitive inner
    normal scaled so the facet offset becomes -1.
    """
    o = poly.origin
    if not poly.contains_interior(o):
        raise DomainError("origin is not interior to the polytope")
    verts = []
    for u, c in poly.facets():
        off = c - dot(u, o)  # <u, m-o> >= off with off < 0
        scale = Fraction(-1, off)
        verts.append(tuple(Fraction(x) * scale for x in u))
    verts = tuple(sorted(set(verts)))
    integral = all(x.denominator == 1 for v in verts for x in v)
    return PolarDual(verts, integral)


@dataclass(frozen=True)
class ReflexivityCertificate:
    holds: bool
    origin_interior: bool
    facet_normals: tuple          # one (u, offset) pair per facet
    nonintegral_polar_vertices: tuple

    def verify(self, poly):
        """Re-check <u, v - origin> == -1 on the vertices of each facet."""
        if not self.holds:
            return False
        o = poly.origin
        for u, _ in self.facet_normals:
            tight = [v for v in poly.vertices if dot(u, vec_sub(v, o)) == -1]
            if len(tight) < poly.ambient_dim:
                return False
            if any(dot(u, vec_sub(v, o)) < -1 for v in poly.vertices):
                return False
        return True


def is_reflexive(poly):
    """Reflexivity test: origin interior and integral polar dual."""
    interior = poly.contains_interior(poly.origin)
    if not interior:
        return False, ReflexivityCertificate(False, False, (), ())
    dual = polar_dual(poly)
    bad = tuple(v for v in dual.vertices
                if any(x.denominator != 1 for x in v))
    o = poly.origin
    normals = tuple((u, c - dot(u, o)) for u, c in poly.facets())
    cert = ReflexivityCertificate(dual.is_integral, True, normals, bad)
    return dual.is_integral, cert


@dataclass(frozen=True)
class VertexSingularityRecord:
    vertex: tuple
    edge_directions: tuple   # primitive directions of incident edges
    valence: int
    determinant: int         # 0 when valence != ambient dim


def is_nonsingular(poly):
    """Delzant test: every vertex N-valent with a unimodular edge frame."""
    n = poly.ambient_dim
    records = []
    ok = True
    for vi, v in enumerate(poly.vertices):
        partners = poly.vertex_edges(vi)
        dirs = tuple(primitive(vec_sub(poly.vertices[p], v)) for p in partners)
        det = 0
        if len(dirs) == n:
            det = int(mat_det(dirs))
        good = len(dirs) == n and abs(det) == 1
        ok = ok and good
        records.append(VertexSingularityRecord(v, dirs, len(dirs), det))
    return ok, tuple(records)


def normalized_volume(simplex_vertices):
    """k! * vol of a lattice k-simplex, measured in the affine lattice
    generated by the integral points of the simplex.

    Equals the index of the vertex-generated sublattice in that lattice,
    which is the covering degree of the associated monomial map.
    """
    pts = [tuple(int(x) for x in p) for p in simplex_vertices]
    k = len(pts) - 1
    if k == 0:
        return 1
    diffs = [vec_sub(p, pts[0]) for p in pts[1:]]
    if mat_rank(diffs) != k:
        raise DomainError("simplex vertices are affinely dependent")
    inner = [vec_sub(q, pts[0]) for q in _simplex_lattice_points(pts)]
    basis = lattice_basis(inner)
    coords = [_coords_in_basis(d, basis) for d in diffs]
    return abs(int(mat_det(coords)))


def _simplex_lattice_points(pts):
    """Integral points of conv(pts) for a (possibly lower-dim) simplex."""
    n = len(pts[0])
    ranges = [range(min(p[j] for p in pts), max(p[j] for p in pts) + 1)
              for j in range(n)]
    count = 1
    for r in ranges:
        count *= len(r)
        if count > MAX_BOX_POINTS:
            raise ResourceError("simplex bounding box too large")
    from itertools import product
    from .linalg import affine_coordinates
    out = []
    for cand in product(*ranges):
        coords = affine_coordinates(pts, cand)
        if coords is not None and all(c >= 0 for c in coords):
            out.append(cand)
    return out


def _coords_in_basis(vector, basis_rows):
    """Integer coordinates of a lattice vector in a lattice basis."""
    k = len(basis_rows)
    n = len(vector)
    rows = [[Fraction(basis_rows[i][j]) for i in range(k)] for j in range(n)]
    sel, rank = [], 0
    for j in range(n):
        if mat_rank([rows[i] for i in sel] + [rows[j]]) > rank:
            sel.append(j)
            rank += 1
        if rank == k:
            break
    sol = solve_linear([rows[j] for j in sel], [vector[j] for j in sel])
    return tuple(sol)


class PointConfiguration:
    """The monomial set A: origin plus lattice points of the polytope.

    Points are indexed; index 0 is always the origin.  The lift and
    triangulation file formats refer to these indices.
    """

    def __init__(self, polytope, points):
        pts = [tuple(int(x) for x in p) for p in points]
        o = polytope.origin
        if o not in pts:
            raise DomainError("point configuration must contain the origin")
        lattice = set(polytope.lattice_points())
        for p in pts:
            if p not in lattice:
                raise DomainError(f"point {p} is not a lattice point of the polytope")
        for v in polytope.vertices:
            if v not in pts:
                raise DomainError(f"vertex {v} missing from the configuration")
        if len(set(pts)) != len(pts):
            raise DomainError("duplicate points in configuration")
        ordered = [o] + sorted(p for p in pts if p != o)
        self.polytope = polytope
        self.points = tuple(ordered)
        self.origin_index = 0
        self._index = {p: i for i, p in enumerate(self.points)}

    @classmethod
    def vertex_only(cls, polytope):
        return cls(polytope, (polytope.origin,) + polytope.vertices)

    @classmethod
    def all_points(cls, polytope):
        return cls(polytope, polytope.lattice_points())

    def index_of(self, point):
        return self._index[tuple(point)]

    def boundary_indices(self):
        return tuple(i for i, p in enumerate(self.points)
                     if not self.polytope.contains_interior(p))

    def __len__(self):
        return len(self.points)

    def __repr__(self):
        return f"PointConfiguration({len(self.points)} points)"
