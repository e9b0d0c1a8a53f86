"""Exact rational and integer linear algebra used by the geometry kernel.

Everything here works on plain Python ints / fractions.Fraction so that all
geometric certificates downstream are bit-exact.  Matrices are lists of lists,
vectors are tuples.  Sizes are desk-scale (N <= 5), so no effort is spent on
asymptotics.
"""

from fractions import Fraction
from math import gcd


def vec_add(a, b):
    return tuple(x + y for x, y in zip(a, b))


def vec_sub(a, b):
    return tuple(x - y for x, y in zip(a, b))


def vec_scale(c, a):
    return tuple(c * x for x in a)


def dot(a, b):
    return sum(x * y for x, y in zip(a, b))


def vec_gcd(a):
    g = 0
    for x in a:
        g = gcd(g, abs(x))
    return g


def primitive(a):
    """Divide an integer vector by the gcd of its entries (zero stays zero)."""
    g = vec_gcd(a)
    if g == 0:
        return tuple(a)
    return tuple(x // g for x in a)


def mat_det(rows):
    """Exact determinant by fraction-free-ish Gaussian elimination."""
    n = len(rows)
    m = [[Fraction(x) for x in r] for r in rows]
    det = Fraction(1)
    for c in range(n):
        piv = next((r for r in range(c, n) if m[r][c] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != c:
            m[c], m[piv] = m[piv], m[c]
            det = -det
        det *= m[c][c]
        inv = 1 / m[c][c]
        for r in range(c + 1, n):
            if m[r][c] != 0:
                f = m[r][c] * inv
                m[r] = [m[r][j] - f * m[c][j] for j in range(n)]
    return det


def mat_rank(rows):
    if not rows:
        return 0
    m = [[Fraction(x) for x in r] for r in rows]
    nrows, ncols = len(m), len(m[0])
    rank = 0
    for c in range(ncols):
        piv = next((r for r in range(rank, nrows) if m[r][c] != 0), None)
        if piv is None:
            continue
        m[rank], m[piv] = m[piv], m[rank]
        inv = 1 / m[rank][c]
        for r in range(nrows):
            if r != rank and m[r][c] != 0:
                f = m[r][c] * inv
                m[r] = [m[r][j] - f * m[rank][j] for j in range(ncols)]
        rank += 1
        if rank == nrows:
            break
    return rank


def solve_linear(rows, rhs):
    """Solve a square exact system; returns tuple of Fractions or None if singular."""
    n = len(rows)
    m = [[Fraction(x) for x in r] + [Fraction(y)] for r, y in zip(rows, rhs)]
    for c in range(n):
        piv = next((r for r in range(c, n) if m[r][c] != 0), None)
        if piv is None:
            return None
        m[c], m[piv] = m[piv], m[c]
        inv = 1 / m[c][c]
        m[c] = [v * inv for v in m[c]]
        for r in range(n):
            if r != c and m[r][c] != 0:
                f = m[r][c]
                m[r] = [m[r][j] - f * m[c][j] for j in range(n + 1)]
    return tuple(m[r][n] for r in range(n))


def nullspace(rows):
    """Rational basis of the right nullspace of an exact matrix."""
    if not rows:
        return []
    nrows, ncols = len(rows), len(rows[0])
    m = [[Fraction(x) for x in r] for r in rows]
    pivots = []
    rank = 0
    for c in range(ncols):
        piv = next((r for r in range(rank, nrows) if m[r][c] != 0), None)
        if piv is None:
            continue
        m[rank], m[piv] = m[piv], m[rank]
        inv = 1 / m[rank][c]
        m[rank] = [v * inv for v in m[rank]]
        for r in range(nrows):
            if r != rank and m[r][c] != 0:
                f = m[r][c]
                m[r] = [m[r][j] - f * m[rank][j] for j in range(ncols)]
        pivots.append(c)
        rank += 1
        if rank == nrows:
            break
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for fc in free:
        v = [Fraction(0)] * ncols
        v[fc] = Fraction(1)
        for r, pc in enumerate(pivots):
            v[pc] = -m[r][fc]
        basis.append(tuple(v))
    return basis


def affine_coordinates(points, target):
    """Barycentric coordinates of target w.r.t. an affinely independent tuple.

    Solves sum c_i p_i = target, sum c_i = 1 exactly.  Returns a tuple of
    Fractions or None when the points are affinely dependent.
    """
    n = len(points[0])
    k = len(points)
    rows = [[Fraction(p[j]) for p in points] for j in range(n)]
    rows.append([Fraction(1)] * k)
    rhs = list(target) + [1]
    if k == n + 1:
        return solve_linear(rows, rhs)
    # overdetermined: solve on an independent row subset, verify the rest
    m = [r[:] + [Fraction(v)] for r, v in zip(rows, rhs)]
    sel, rank = [], 0
    for i, row in enumerate(m):
        trial = [m[j] for j in sel] + [row]
        if mat_rank([r[:-1] for r in trial]) == rank + 1:
            sel.append(i)
            rank += 1
        if rank == k:
            break
    if rank < k:
        return None
    sol = solve_linear([[m[i][j] for j in range(k)] for i in sel],
                       [m[i][k] for i in sel])
    if sol is None:
        return None
    for i, row in enumerate(m):
        if sum(row[j] * sol[j] for j in range(k)) != row[k]:
            return None
    return sol


def hnf(rows):
    """Row-style Hermite normal form of an integer matrix.

    Returns (H, U) with U unimodular, U*rows == H, H upper echelon with
    positive pivots and reduced entries above them.
    """
    m = [list(r) for r in rows]
    nrows = len(m)
    ncols = len(m[0]) if m else 0
    U = [[1 if i == j else 0 for j in range(nrows)] for i in range(nrows)]
    row = 0
    for col in range(ncols):
        piv = None
        for r in range(row, nrows):
            if m[r][col] != 0:
                piv = r
                break
        if piv is None:
            continue
        m[row], m[piv] = m[piv], m[row]
        U[row], U[piv] = U[piv], U[row]
        for r in range(row + 1, nrows):
            while m[r][col] != 0:
                q = m[row][col] // m[r][col]
                m[row] = [a - q * b for a, b in zip(m[row], m[r])]
                U[row] = [a - q * b for a, b in zip(U[row], U[r])]
                m[row], m[r] = m[r], m[row]
                U[row], U[r] = U[r], U[row]
        if m[row][col] < 0:
            m[row] = [-a for a in m[row]]
            U[row] = [-a for a in U[row]]
        for r in range(row):
            q = m[r][col] // m[row][col]
            if q:
                m[r] = [a - q * b for a, b in zip(m[r], m[row])]
                U[r] = [a - q * b for a, b in zip(U[r], U[row])]
        row += 1
        if row == nrows:
            break
    return [tuple(r) for r in m], [tuple(r) for r in U]


def lattice_basis(vectors):
    """Basis (list of primitive-echelon integer rows) of the lattice spanned
    by the given integer vectors."""
    if not vectors:
        return []
    H, _ = hnf(vectors)
    return [r for r in H if any(x != 0 for x in r)]


def saturation(vectors):
    """Basis of the saturation (R-span intersected with Z^n) of an integer span."""
    basis = lattice_basis(vectors)
    if not basis:
        return []
    ncols = len(basis[0])
    # saturation = integer kernel of the integer kernel (double annihilator)
    ker = integer_kernel(basis)
    if not ker:
        # full rank: saturation is Z^n
        return [tuple(1 if i == j else 0 for j in range(ncols)) for i in range(ncols)]
    return integer_kernel(ker)


def integer_kernel(rows):
    """Basis of {x in Z^n : rows @ x = 0} via HNF of the transpose trick."""
    if not rows:
        return []
    ncols = len(rows[0])
    # work on the transpose: kernel vectors are integer combinations of unit
    # vectors killed by all rows
    t = [[rows[r][c] for r in range(len(rows))] for c in range(ncols)]
    H, U = hnf(t)
    ker = []
    for i, h in enumerate(H):
        if all(x == 0 for x in h):
            ker.append(U[i])
    return [tuple(v) for v in ker]


def mat_inverse_int(rows):
    """Inverse of a unimodular integer matrix, returned with int entries."""
    n = len(rows)
    inv = []
    for i in range(n):
        rhs = [1 if j == i else 0 for j in range(n)]
        col = solve_linear(rows, rhs)
        if col is None:
            raise ValueError("matrix is singular")
        inv.append(col)
    out = []
    for i in range(n):
        row = []
        for j in range(n):
            v = inv[j][i]
            if v.denominator != 1:
                raise ValueError("matrix is not unimodular")
            row.append(int(v))
        out.append(tuple(row))
    return out


def complete_to_unimodular(basis_rows, n):
    """Extend independent integer rows spanning a saturated lattice to a
    det +-1 basis of Z^n.

    Uses the column Hermite form: with U*B^T in echelon form, the row
    lattice of B becomes Z^k x 0 in the new coordinates (saturation makes
    the triangular factor unimodular), so the missing rows are the images
    of the last n-k unit vectors.
    """
    rows = [tuple(r) for r in basis_rows]
    k = len(rows)
    if k == 0:
        return [tuple(1 if i == j else 0 for j in range(n)) for i in range(n)]
    bt = [[rows[i][j] for i in range(k)] for j in range(n)]
    H, U = hnf(bt)
    t_block = [H[i][:k] for i in range(k)]
    if abs(mat_det(t_block)) != 1:
        raise ValueError("lattice is not saturated; cannot complete unimodularly")
    u_inv_t = [tuple(r) for r in zip(*mat_inverse_int(U))]
    result = rows + [u_inv_t[i] for i in range(k, n)]
    if abs(mat_det(result)) != 1:
        raise ValueError("completion failed to be unimodular")
    return result
