"""Exact max-min-slack feasibility core over the rationals.

Solves  max eps  subject to  <g_i, x> >= eps  (i = 1..m),  eps <= 1,
with some coordinates of x pinned to zero (gauge fixing).  Because every
row system handed to it is invariant under positive scaling of x, the
optimum is either 1 (strictly feasible) or 0 (infeasible as a strict
system); in the latter case the optimal dual gives nonnegative weights
y with sum(y) = 1 and sum(y_i g_i) = 0 -- an exact certificate that no
strict solution exists.

Implemented as a dense tableau simplex over Fractions with Bland's rule,
which is plenty for desk-scale systems (tens of rows and columns).
"""

from fractions import Fraction

from .errors import InfeasibleError


class SlackSystem:
    """A system of strict linear inequalities <g_i, x> > 0 on R^n."""

    def __init__(self, nvars, pinned=()):
        self.nvars = nvars
        self.pinned = frozenset(pinned)
        self.rows = []
        self.labels = []

    def add(self, coeffs, label):
        """coeffs: mapping index -> Fraction (sparse row)."""
        row = [Fraction(0)] * self.nvars
        for j, c in coeffs.items():
            row[j] = Fraction(c)
        self.rows.append(row)
        self.labels.append(label)

    def evaluate(self, x):
        """Per-row values <g_i, x> for a candidate solution."""
        return [sum(r[j] * x[j] for j in range(self.nvars)) for r in self.rows]

    def solve(self):
        """Returns (eps_star, x) with eps_star in {0, 1}.

        eps_star == 1: x is a rational point with every row value >= 1.
        eps_star == 0: raises InfeasibleError with the dual certificate.
        """
        free = [j for j in range(self.nvars) if j not in self.pinned]
        m = len(self.rows)
        nf = len(free)
        # columns: p (nf), q (nf), eps' (1), slacks (m rows) + bound slack
        # row i: -<g,p> + <g,q> + eps' + s_i = 1   (from <g,x> >= eps, eps=eps'-1... )
        #
        # derivation: maximize eps, eps = eps' - 1, constraints
        #   <g, x> - eps >= 0  <=>  -<g,x> + eps' <= 1
        #   eps <= 1           <=>  eps' <= 2
        ncols = 2 * nf + 1 + m + 1
        A = []
        b = []
        for i, g in enumerate(self.rows):
            row = [Fraction(0)] * ncols
            for jj, j in enumerate(free):
                row[jj] = -g[j]
                row[nf + jj] = g[j]
            row[2 * nf] = Fraction(1)
            row[2 * nf + 1 + i] = Fraction(1)
            A.append(row)
            b.append(Fraction(1))
        bound = [Fraction(0)] * ncols
        bound[2 * nf] = Fraction(1)
        bound[2 * nf + 1 + m] = Fraction(1)
        A.append(bound)
        b.append(Fraction(2))
        c = [Fraction(0)] * ncols
        c[2 * nf] = Fraction(1)
        basis = list(range(2 * nf + 1, ncols))
        value, x, reduced = _simplex_max(A, b, c, basis)
        eps = value - 1
        if eps >= 1:
            sol = [Fraction(0)] * self.nvars
            for jj, j in enumerate(free):
                sol[j] = x[jj] - x[nf + jj]
            return 1, sol
        # optimal dual weights live in the reduced costs of the row slacks
        duals = [reduced[2 * nf + 1 + i] for i in range(m)]
        cert = [(self.labels[i], duals[i]) for i in range(m) if duals[i] != 0]
        self._check_certificate(duals)
        raise InfeasibleError(
            "no strictly feasible point: system admits a nonnegative "
            "combination of inequalities summing to a contradiction", cert)

    def _check_certificate(self, duals):
        assert all(d >= 0 for d in duals)
        assert sum(duals) == 1
        for j in range(self.nvars):
            if j in self.pinned:
                continue
            assert sum(d * g[j] for d, g in zip(duals, self.rows)) == 0


def _simplex_max(A, b, c, basis):
    """Dense tableau simplex: max c.x, Ax=b, x>=0, starting identity basis.

    Returns (objective, x, reduced_cost_row).  Bland's rule, exact pivots.
    """
    m = len(A)
    n = len(A[0])
    T = [row[:] + [b[i]] for i, row in enumerate(A)]
    basis = basis[:]
    while True:
        cb = [c[j] for j in basis]
        reduced = []
        for j in range(n):
            zj = sum(cb[i] * T[i][j] for i in range(m))
            reduced.append(c[j] - zj)
        enter = next((j for j in range(n) if reduced[j] > 0), None)
        if enter is None:
            break
        ratios = [(T[i][n] / T[i][enter], basis[i], i)
                  for i in range(m) if T[i][enter] > 0]
        if not ratios:
            raise ArithmeticError("unbounded feasibility program")
        _, _, leave = min(ratios)
        piv = T[leave][enter]
        T[leave] = [v / piv for v in T[leave]]
        for i in range(m):
            if i != leave and T[i][enter] != 0:
                f = T[i][enter]
                T[i] = [v - f * w for v, w in zip(T[i], T[leave])]
        basis[leave] = enter
    x = [Fraction(0)] * n
    for i, j in enumerate(basis):
        x[j] = T[i][n]
    cb = [c[j] for j in basis]
    reduced = []
    for j in range(n):
        zj = sum(cb[i] * T[i][j] for i in range(m))
        reduced.append(zj - c[j])
    value = sum(c[j] * x[j] for j in range(n))
    return value, x, reduced
