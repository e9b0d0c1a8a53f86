"""Combinatorics of the fibration base: barycentric subdivisions, the dual
W-cell decomposition of the boundary sphere, the dual Delzant polytope, and
the discriminant skeletons on both sides of the mirror.

W-cells are combinatorial objects (one per boundary simplex, with reversed
incidence); their metric realizations, used for sampling and plotting, are
unions of second-barycentric simplices with exact rational coordinates.
"""

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations

from .errors import DomainError
from .linalg import affine_coordinates, dot, mat_rank, solve_linear, vec_sub


def _centroid(points):
    k = len(points)
    n = len(points[0])
    return tuple(sum(Fraction(p[j]) for p in points) / k for j in range(n))


class GeometricComplex:
    """A simplicial complex with rational vertex coordinates and payloads."""

    def __init__(self, vertex_coords, vertex_labels, maximal):
        self.vertex_coords = tuple(vertex_coords)
        self.vertex_labels = tuple(vertex_labels)
        self.maximal = tuple(sorted(tuple(sorted(s)) for s in maximal))

    def subdivide(self):
        """First barycentric subdivision; labels become face chains."""
        faces = set()
        for s in self.maximal:
            for k in range(1, len(s) + 1):
                faces.update(combinations(s, k))
        faces = sorted(faces, key=lambda f: (len(f), f))
        index = {f: i for i, f in enumerate(faces)}
        coords = [_centroid([self.vertex_coords[i] for i in f]) for f in faces]
        labels = [tuple(self.vertex_labels[i] for i in f) for f in faces]
        maximal = []
        for s in self.maximal:
            for flag in _full_flags(s):
                maximal.append(tuple(index[f] for f in flag))
        return GeometricComplex(coords, labels, maximal)

    def simplex_count(self, dim=None):
        if dim is None:
            return len(self.maximal)
        faces = set()
        for s in self.maximal:
            faces.update(combinations(s, dim + 1))
        return len(faces)


def _full_flags(simplex):
    """All maximal chains f_1 < f_2 < ... < f_k of subsets of a simplex."""
    k = len(simplex)
    flags = []

    def grow(chain):
        top = chain[-1]
        if len(top) == k:
            flags.append(tuple(chain))
            return
        remaining = [v for v in simplex if v not in top]
        for v in remaining:
            grow(chain + [tuple(sorted(top + (v,)))])

    for v in simplex:
        grow([(v,)])
    return flags


def barycentric(boundary, order=1):
    """Barycentric subdivision (order 1 or 2) of a boundary complex.

    Vertices of the result are tagged by the originating simplex chains,
    with exact rational centroid coordinates.
    """
    if order not in (1, 2):
        raise DomainError("order must be 1 or 2")
    pts = boundary.config.points
    base = GeometricComplex(
        [pts[i[0]] for i in boundary.simplices_of_dim(0)],
        [i[0] for i in boundary.simplices_of_dim(0)],
        [tuple(_vertex_pos(boundary, i) for i in s) for s in boundary.maximal])
    bar = base.subdivide()
    return bar.subdivide() if order == 2 else bar


def _vertex_pos(boundary, point_index):
    verts = [v[0] for v in boundary.simplices_of_dim(0)]
    return verts.index(point_index)


@dataclass(frozen=True)
class WCell:
    simplex: tuple       # the boundary simplex tau (A-indices)
    dim: int             # N-1-dim(tau): the dual block dimension
    incident: tuple      # cells meeting this one (nested simplices)


class WCellComplex:
    """Dual cell decomposition of the boundary, one cell per simplex of the
    boundary triangulation, with reversed incidence.

    Metric support of a cell: the closed second-barycentric simplices whose
    minimal flag label is the cell's simplex.
    """

    def __init__(self, boundary):
        self.boundary = boundary
        poly = boundary.config.polytope
        n = poly.ambient_dim
        simps = boundary.simplices
        cells = {}
        for tau in simps:
            nested = tuple(s for s in simps if s != tau
                           and (set(s) <= set(tau) or set(tau) <= set(s)))
            cells[tau] = WCell(tau, n - 1 - (len(tau) - 1), nested)
        self.cells = cells
        self._build_support()

    def _build_support(self):
        bnd = self.boundary
        bar1 = barycentric(bnd, 1)
        bar2 = bar1.subdivide()
        # a maximal Bar^2 simplex is a flag of Bar chains (each chain a tuple
        # of boundary simplices); its cell is the minimal element of the
        # shortest chain, and its carrier sigma the maximal element of the
        # longest chain
        support = {}
        owners = []
        carriers = []
        for s in bar2.maximal:
            labels = [bar2.vertex_labels[i] for i in s]
            shortest = min(labels, key=len)
            longest = max(labels, key=len)
            tau = tuple(sorted(shortest[0]))
            sigma = tuple(sorted(longest[-1]))
            owners.append(tau)
            carriers.append(sigma)
            support.setdefault(tau, []).append(s)
        self.bar2 = bar2
        self._owners = tuple(owners)
        self._carriers = tuple(carriers)
        self._support = {k: tuple(v) for k, v in support.items()}

    def cell_support(self, tau):
        """Closed Bar^2 simplices whose union carries the cell of tau."""
        return self._support.get(tuple(sorted(tau)), ())

    def cell_support_points(self, tau):
        out = []
        for s in self.cell_support(tau):
            out.append(_centroid([self.bar2.vertex_coords[i] for i in s]))
        return out

    def locate(self, point):
        """(tau, pure) for a rational boundary point: the minimal cell whose
        closed support contains it, and whether the point is in the pure
        region (only one cell's support)."""
        pt = tuple(Fraction(x) for x in point)
        pts = self.boundary.config.points
        candidates = []
        for sigma in self.boundary.maximal:
            coords = affine_coordinates([pts[i] for i in sigma], pt)
            if coords is not None and all(c >= 0 for c in coords):
                candidates.append(sigma)
        hits = set()
        for s, tau, sigma in zip(self.bar2.maximal, self._owners,
                                 self._carriers):
            if sigma not in candidates:
                continue
            coords = affine_coordinates(
                [self.bar2.vertex_coords[i] for i in s], pt)
            if coords is not None and all(c >= 0 for c in coords):
                hits.add(tau)
        if not hits:
            raise DomainError(f"point {point} is not on the boundary complex")
        minimal = min(hits, key=lambda t: (len(t), t))
        for t in hits:
            if not set(minimal) <= set(t):
                # non-nested overlap can only happen on a frontier: pick the
                # smallest cell and flag it
                return minimal, False
        return minimal, len(hits) == 1

    def euler_characteristic(self):
        return sum((-1) ** c.dim for c in self.cells.values())

    def __repr__(self):
        return f"WCellComplex({len(self.cells)} cells)"


def w_decomposition(boundary):
    return WCellComplex(boundary)


class DualPolytope:
    """The Delzant-type dual polytope cut out by <m, omega> >= gamma * dh,
    dh = lift(omega) - lift(origin), over the boundary vertices of T.

    Combinatorially dual to (Delta, T) with reversed incidence; each
    boundary simplex tau labels the face where all its inequalities are
    tight.
    """

    def __init__(self, tri, lam, gamma=1):
        gamma = Fraction(gamma)
        if gamma <= 0:
            raise DomainError("gamma must be positive")
        config = tri.config
        o = config.origin_index
        n = config.polytope.ambient_dim
        idx = [i for i in tri.t_vertices() if i != o]
        self.gamma = gamma
        self.tri = tri
        self.lift = lam
        self.inequalities = tuple(
            (i, gamma * (lam[i] - lam[o])) for i in idx)
        verts = {}
        for sub in combinations(range(len(idx)), n):
            rows = [config.points[idx[j]] for j in sub]
            rhs = [self.inequalities[j][1] for j in sub]
            sol = solve_linear(rows, rhs)
            if sol is None:
                continue
            if all(dot(config.points[i], sol) >= b
                   for i, b in self.inequalities):
                verts[sol] = None
        vertices = tuple(sorted(verts))
        if len(vertices) < n + 1 or mat_rank(
                [vec_sub(v, vertices[0]) for v in vertices[1:]]) < n:
            raise DomainError(
                "dual polytope has empty interior; the lift is not "
                "strictly convex for the triangulation")
        self.vertices = vertices
        self._tight = {
            v: frozenset(i for i, b in self.inequalities
                         if dot(self.tri.config.points[i], v) == b)
            for v in vertices}

    def dual_face(self, tau):
        """Vertices of the face dual to a boundary simplex tau."""
        tau = tuple(sorted(tau))
        if tau not in self.tri.boundary().simplices:
            raise DomainError(f"{tau} is not a simplex of the boundary triangulation")
        need = set(tau)
        face = tuple(v for v in self.vertices if need <= self._tight[v])
        if not face:
            raise AssertionError(f"dual face of {tau} is empty")
        return face

    def dual_face_center(self, tau):
        return _centroid(self.dual_face(tau))

    def dual_face_dim(self, tau):
        face = self.dual_face(tau)
        if len(face) == 1:
            return 0
        return mat_rank([vec_sub(v, face[0]) for v in face[1:]])


def dual_polytope(tri, lam, gamma=1):
    return DualPolytope(tri, lam, gamma)


@dataclass(frozen=True)
class NuMap:
    """The simplicial correspondence tau -> dual face, with the cellwise
    representative: every W-cell maps to the exact center of its dual face."""

    pairs: tuple            # (tau, dual face vertex tuple, center)

    def center_of(self, tau):
        tau = tuple(sorted(tau))
        for t, _, c in self.pairs:
            if t == tau:
                return c
        raise KeyError(tau)

    def is_bijective(self):
        centers = [c for _, _, c in self.pairs]
        return len(set(centers)) == len(centers)

    def reverses_incidence(self):
        for t1, f1, _ in self.pairs:
            for t2, f2, _ in self.pairs:
                if set(t1) < set(t2) and not set(f2) < set(f1):
                    return False
        return True


def nu_map(dual):
    """Build the vertex bijection O(tau) -> O(dual face) for a DualPolytope."""
    pairs = []
    for tau in dual.tri.boundary().simplices:
        face = dual.dual_face(tau)
        pairs.append((tau, face, _centroid(face)))
    return NuMap(tuple(pairs))


@dataclass(frozen=True)
class DiscriminantSkeleton:
    """Order complex of the positive-dimensional boundary-skeleton simplices.

    vertices: boundary simplices tau (tuples of A-indices);
    chains: nested chains (tau_1 < ... < tau_k), one (k-1)-simplex each.
    """

    vertices: tuple
    chains: tuple
    excluded: tuple = ()

    @property
    def dim(self):
        return max((len(c) - 1 for c in self.chains), default=-1)

    def counts(self):
        by_dim = {}
        for c in self.chains:
            by_dim[len(c) - 1] = by_dim.get(len(c) - 1, 0) + 1
        return by_dim

    def is_empty(self):
        return not self.vertices


def discriminant_skeleton(boundary):
    """Combinatorial model of the singular-fiber locus: one vertex per
    positive-dimensional simplex of the boundary triangulation lying in the
    codimension-2 skeleton of the polytope, simplices from nested chains."""
    poly = boundary.config.polytope
    n = poly.ambient_dim
    if n < 3:
        return DiscriminantSkeleton((), ())
    verts = []
    for tau in boundary.simplices:
        if len(tau) < 2:
            continue
        theta = boundary.minimal_face_of(tau)
        if theta.dim <= n - 2:
            verts.append(tau)
    verts = tuple(sorted(verts, key=lambda t: (len(t), t)))
    chains = _nested_chains(verts)
    return DiscriminantSkeleton(verts, chains)


def mirror_skeleton(dual):
    """The dual-side discriminant complex, with the blow-up faces excluded.

    Candidates are the simplices whose dual face is positive-dimensional and
    sits in the codimension-2 skeleton of the dual polytope; excluded are
    those whose carrier in Delta is a facet.  The survivors biject with the
    primal skeleton vertices under the nu correspondence.
    """
    boundary = dual.tri.boundary()
    poly = boundary.config.polytope
    n = poly.ambient_dim
    if n < 3:
        return DiscriminantSkeleton((), ())
    candidates = [tau for tau in boundary.simplices
                  if 1 <= len(tau) - 1 <= n - 2]
    excluded, verts = [], []
    for tau in candidates:
        theta = boundary.minimal_face_of(tau)
        if theta.dim == n - 1:
            excluded.append(tau)
        else:
            verts.append(tau)
    verts = tuple(sorted(verts, key=lambda t: (len(t), t)))
    chains = _nested_chains(verts)  # chains of tau's = reversed chains of duals
    return DiscriminantSkeleton(verts, chains, tuple(sorted(excluded)))


def skeleton_isomorphism(primal, mirror):
    """Certificate that the nu correspondence identifies the two skeletons."""
    return (primal.vertices == mirror.vertices
            and len(primal.chains) == len(mirror.chains)
            and primal.counts() == mirror.counts())


def _nested_chains(verts):
    chains = []
    order = {v: i for i, v in enumerate(verts)}

    def grow(chain):
        chains.append(tuple(chain))
        last = chain[-1]
        for v in verts:
            if order[v] > order[chain[-1]] and set(last) < set(v):
                grow(chain + [v])

    for v in verts:
        grow([v])
    return tuple(sorted(chains, key=lambda c: (len(c), c)))
