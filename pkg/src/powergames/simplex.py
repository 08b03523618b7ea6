"""Dense primal simplex for small linear programs.

Problems are stated as ``max c.x`` over ``A_ge x >= b_ge``, ``A_eq x = b_eq``
and per-variable bounds. The solver works on the standard-form reformulation
(shifted/split variables, surplus columns, artificials for rows without an
identity column) with a two-phase start.

Pivoting: steepest-edge pricing with a Harris-style ratio test (largest pivot
among near-tied rows, relative pivot floor). Long runs of degenerate pivots
trigger a deterministic right-hand-side perturbation in the current basis
frame and, as a last resort, Bland's rule. The tableau is refactorized from
the original data periodically and before any verdict is accepted; dropping
the perturbation is followed by a dual-simplex cleanup. Identical inputs take
identical pivot sequences.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import SolverStallError

INF = float("inf")


@dataclass(frozen=True)
class LpProblem:
    """``max objective . x`` subject to rows and bounds.

    ``ineq_rows`` entries mean ``coeffs . x >= rhs``; ``eq_rows`` entries mean
    ``coeffs . x = rhs``. ``bounds[j]`` is ``(lo, hi)``, default ``(0, +inf)``.
    """

    n: int
    objective: np.ndarray
    ineq_coeffs: np.ndarray   # (m_ge, n)
    ineq_rhs: np.ndarray      # (m_ge,)
    eq_coeffs: np.ndarray     # (m_eq, n)
    eq_rhs: np.ndarray        # (m_eq,)
    lo: np.ndarray            # (n,)
    hi: np.ndarray            # (n,)
    name: str = "lp"

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("need at least one variable")
        for arr, cols in ((self.objective, None), (self.ineq_coeffs, self.n),
                          (self.eq_coeffs, self.n)):
            if cols is not None and arr.ndim == 2 and arr.shape[1] != cols:
                raise ValueError("row length does not match variable count")
        if self.objective.shape != (self.n,):
            raise ValueError("objective length does not match variable count")
        if self.ineq_coeffs.shape[0] != self.ineq_rhs.shape[0]:
            raise ValueError("inequality rhs count mismatch")
        if self.eq_coeffs.shape[0] != self.eq_rhs.shape[0]:
            raise ValueError("equality rhs count mismatch")
        for arr in (self.objective, self.ineq_coeffs, self.ineq_rhs,
                    self.eq_coeffs, self.eq_rhs):
            if arr.size and not np.isfinite(arr).all():
                raise ValueError("coefficients must be finite")
        if np.any(self.lo > self.hi):
            raise ValueError("lower bound exceeds upper bound")
        if np.any(np.isnan(self.lo)) or np.any(np.isnan(self.hi)):
            raise ValueError("bounds must not be NaN")

    @property
    def row_count(self) -> int:
        return self.ineq_coeffs.shape[0] + self.eq_coeffs.shape[0]


def make_problem(objective, ineq_rows=(), eq_rows=(), bounds=None, name="lp") -> LpProblem:
    """Convenience constructor from (coeffs, rhs) pair lists."""
    c = np.asarray(objective, dtype=float)
    n = c.shape[0]

    def split(rows):
        if not rows:
            return np.zeros((0, n)), np.zeros(0)
        coeffs = np.asarray([r[0] for r in rows], dtype=float)
        rhs = np.asarray([r[1] for r in rows], dtype=float)
        return coeffs, rhs

    a_ge, b_ge = split(list(ineq_rows))
    a_eq, b_eq = split(list(eq_rows))
    lo = np.zeros(n)
    hi = np.full(n, INF)
    if bounds is not None:
        for j, (l, h) in enumerate(bounds):
            lo[j] = -INF if l is None else float(l)
            hi[j] = INF if h is None else float(h)
    return LpProblem(n, c, a_ge, b_ge, a_eq, b_eq, lo, hi, name)


@dataclass(frozen=True)
class LpSolution:
    status: str                      # "optimal" | "infeasible" | "unbounded"
    x: Optional[np.ndarray]          # present iff optimal
    objective_value: Optional[float]
    iterations: int


@dataclass(frozen=True)
class SimplexOptions:
    feas_tol: float = 1e-9
    opt_tol: float = 1e-9
    piv_abs: float = 1e-11     # absolute pivot magnitude floor
    piv_rel: float = 1e-9      # relative pivot floor vs column max
    stall_threshold: int = 64  # consecutive degenerate pivots before escalating
    refactor_every: int = 200
    max_iter: Optional[int] = None  # default 50 * (columns + rows) in standard form


class _Standardized:
    """Standard-form data plus the map back to original variables."""

    def __init__(self, prob: LpProblem):
        n = prob.n
        lo, hi = prob.lo, prob.hi
        # per-variable transform: 0 shift (x = lo + y), 1 mirror (x = hi - y),
        # 2 split (x = y - y_extra)
        self.kind = np.empty(n, dtype=int)
        self.offset = np.zeros(n)
        free = []
        for j in range(n):
            if lo[j] > -INF:
                self.kind[j] = 0
                self.offset[j] = lo[j]
            elif hi[j] < INF:
                self.kind[j] = 1
                self.offset[j] = hi[j]
            else:
                self.kind[j] = 2
                free.append(j)
        self.free = free
        self.n = n
        self.n_std = n + len(free)

        def transform_rows(coeffs, rhs):
            if coeffs.shape[0] == 0:
                return np.zeros((0, self.n_std)), rhs.copy()
            out = np.zeros((coeffs.shape[0], self.n_std))
            out[:, :n] = coeffs
            new_rhs = rhs - coeffs @ self.offset
            mirror = self.kind == 1
            if mirror.any():
                out[:, :n][:, mirror] *= -1.0
            for k, j in enumerate(free):
                out[:, n + k] = -coeffs[:, j]
            return out, new_rhs

        a_ge, b_ge = transform_rows(prob.ineq_coeffs, prob.ineq_rhs)
        a_eq, b_eq = transform_rows(prob.eq_coeffs, prob.eq_rhs)
        # residual finite ranges become -y_j >= -(hi - lo)
        ranged = [j for j in range(n) if lo[j] > -INF and hi[j] < INF and hi[j] > lo[j]]
        fixed = [j for j in range(n) if lo[j] > -INF and hi[j] == lo[j]]
        extra = []
        extra_rhs = []
        for j in ranged:
            row = np.zeros(self.n_std)
            row[j] = -1.0
            extra.append(row)
            extra_rhs.append(-(hi[j] - lo[j]))
        for j in fixed:
            row = np.zeros(self.n_std)
            row[j] = -1.0
            extra.append(row)
            extra_rhs.append(0.0)
        if extra:
            a_ge = np.vstack([a_ge, np.asarray(extra)])
            b_ge = np.concatenate([b_ge, np.asarray(extra_rhs)])
        self.a_ge, self.b_ge = a_ge, b_ge
        self.a_eq, self.b_eq = a_eq, b_eq

        c = np.zeros(self.n_std)
        c[:n] = prob.objective
        c[:n][self.kind == 1] *= -1.0
        for k, j in enumerate(free):
            c[n + k] = -prob.objective[j]
        self.c = c

    def map_back(self, y: np.ndarray) -> np.ndarray:
        x = np.empty(self.n)
        for j in range(self.n):
            if self.kind[j] == 0:
                x[j] = self.offset[j] + y[j]
            elif self.kind[j] == 1:
                x[j] = self.offset[j] - y[j]
            else:
                x[j] = y[j]
        for k, j in enumerate(self.free):
            x[j] -= y[self.n + k]
        return x


class _Tableau:
    """Two-phase dense tableau with refactorization against original data."""

    def __init__(self, std: _Standardized, opts: SimplexOptions):
        self.opts = opts
        n = std.n_std
        m_ge = std.a_ge.shape[0]
        m_eq = std.a_eq.shape[0]
        m = m_ge + m_eq
        rows = np.vstack([std.a_ge, std.a_eq]) if m else np.zeros((0, n))
        b = np.concatenate([std.b_ge, std.b_eq])
        sur_sign = np.zeros(m)
        sur_sign[:m_ge] = -1.0
        flip = np.zeros(m, dtype=bool)
        for r in range(m):
            if b[r] < 0 or (r < m_ge and b[r] <= 0):
                flip[r] = True
        rows[flip] *= -1.0
        b[flip] = -b[flip]
        sur_sign[flip] *= -1.0

        self.m, self.m_ge = m, m_ge
        basis = np.empty(m, dtype=int)
        art_of_row = {}
        k = 0
        for r in range(m):
            if r < m_ge and sur_sign[r] > 0:
                basis[r] = n + r
            else:
                basis[r] = n + m_ge + k
                art_of_row[r] = k
                k += 1
        self.n_art = k
        N = n + m_ge + k
        self.n_struct = n
        self.N = N
        self.basis = basis

        A_all = np.zeros((m, N))
        A_all[:, :n] = rows
        if m_ge:
            A_all[np.arange(m_ge), n + np.arange(m_ge)] = sur_sign[:m_ge]
        for r, kk in art_of_row.items():
            A_all[r, n + m_ge + kk] = 1.0
        self.A_all = A_all
        self.b_true = b
        self.b_active = b.copy()
        self.d2 = np.zeros(N)
        self.d2[:n] = -std.c
        self.d1 = np.zeros(N)
        self.d1[n + m_ge:] = 1.0
        self.T = np.empty((m, N + 1))
        self.obj = np.empty((2, N + 1))
        self.allowed = np.ones(N, dtype=bool)
        self.iters = 0
        self.max_iter = opts.max_iter if opts.max_iter is not None else 50 * (N + m)
        self.pert_u = (np.arange(1, m + 1) * 0.6180339887498949) % 1.0 + 0.5

    def refactor(self) -> float:
        B = self.A_all[:, self.basis]
        try:
            binv_a = np.linalg.solve(B, self.A_all)
            xb = np.linalg.solve(B, self.b_active)
        except np.linalg.LinAlgError:
            binv_a, *_ = np.linalg.lstsq(B, self.A_all, rcond=None)
            xb, *_ = np.linalg.lstsq(B, self.b_active, rcond=None)
        self.T[:, : self.N] = binv_a
        xb[np.abs(xb) < 1e-11] = 0.0
        self.T[:, -1] = xb
        for j, d in ((0, self.d2), (1, self.d1)):
            dB = d[self.basis]
            self.obj[j, : self.N] = d - dB @ binv_a
            self.obj[j, -1] = -(dB @ xb)
            self.obj[j, self.basis] = 0.0
        return float(xb.min()) if self.m else 0.0

    def pivot_at(self, r: int, q: int):
        T = self.T
        piv = T[r, q]
        T[r, :] /= piv
        col = T[:, q].copy()
        col[r] = 0.0
        T[:, :] -= np.outer(col, T[r, :])
        T[:, q] = 0.0
        T[r, q] = 1.0
        for j in range(2):
            f = self.obj[j, q]
            if f != 0.0:
                self.obj[j, :] -= f * T[r, :]
                self.obj[j, q] = 0.0
        self.basis[r] = q
        rhs = T[:, -1]
        np.copyto(rhs, 0.0, where=np.abs(rhs) < 1e-12)
        self.iters += 1
        if self.iters > self.max_iter:
            raise SolverStallError(
                f"simplex exceeded {self.max_iter} pivots without a verdict"
            )

    def entering(self, jo: int, bland: bool, phase: int) -> int:
        rc = self.obj[jo, : self.N]
        cand = np.where(self.allowed & (rc < -self.opts.opt_tol))[0]
        if cand.size == 0:
            return -1
        if bland:
            return int(cand[0])
        rcc = rc[cand]
        if cand.size > 1:
            cols = self.T[:, cand]
            norms = np.sqrt(1.0 + np.einsum("ij,ij->j", cols, cols))
            score = rcc / norms
        else:
            score = rcc
        best = score.min()
        near = cand[score <= best * (1 - 1e-12)]
        if near.size == 0:
            near = cand[score <= best]
        if phase == 1 and near.size > 1:
            # toward the eventual phase-2 objective among equally good columns
            return int(near[np.argmin(self.obj[0, near])])
        return int(near[0])

    def ratio_row(self, q: int, bland: bool) -> tuple[int, float]:
        col = self.T[:, q]
        floor = max(self.opts.piv_abs, self.opts.piv_rel * float(np.abs(col).max(initial=0.0)))
        pos = col > floor
        if not pos.any():
            return -1, 0.0
        rhs = np.maximum(self.T[:, -1], 0.0)
        ratios = np.full(self.m, np.inf)
        ratios[pos] = rhs[pos] / col[pos]
        rmin = float(ratios.min())
        window = rmin + max(1e-12, 1e-9 * rmin)
        ties = np.where(ratios <= window)[0]
        if bland:
            r = ties[np.argmin(self.basis[ties])]
        else:
            r = ties[np.argmax(col[ties])]
        return int(r), rmin

    def perturb(self):
        eps = 1e-8 * (1.0 + float(np.abs(self.b_true).max(initial=0.0))) * self.pert_u
        self.b_active = self.b_active + self.A_all[:, self.basis] @ eps
        self.T[:, -1] += eps

    def drop_perturbation(self) -> float:
        self.b_active = self.b_true.copy()
        return self.refactor()

    def pivot_loop(self, phase: int) -> str:
        jo = 0 if phase == 2 else 1
        degen = 0
        bland = False
        perturbs = 0
        since_refactor = 0
        while True:
            q = self.entering(jo, bland, phase)
            if q < 0:
                self.refactor()
                q = self.entering(jo, bland, phase)
                if q < 0:
                    return "optimal"
            r, rmin = self.ratio_row(q, bland)
            if r < 0:
                self.refactor()
                r, rmin = self.ratio_row(q, bland)
                if r < 0:
                    return "unbounded"
            self.pivot_at(r, q)
            since_refactor += 1
            if rmin <= 1e-12:
                degen += 1
            else:
                degen = 0
                bland = False
            if degen >= self.opts.stall_threshold:
                degen = 0
                if perturbs < 8:
                    self.perturb()
                    perturbs += 1
                else:
                    bland = True
            elif since_refactor >= self.opts.refactor_every or abs(self.obj[jo, -1]) > 1e13:
                self.refactor()
                since_refactor = 0

    def dual_cleanup(self, jo: int, limit: int = 4000) -> bool:
        """From a dual-feasible basis, pivot negative basics out."""
        for _ in range(limit):
            rhs = self.T[:, -1]
            r = int(np.argmin(rhs))
            if rhs[r] >= -self.opts.feas_tol:
                return True
            row = self.T[r, : self.N]
            cand = np.where(self.allowed & (row < -self.opts.piv_abs))[0]
            if cand.size == 0:
                return False
            rc = self.obj[jo, : self.N]
            ratios = rc[cand] / (-row[cand])
            near = cand[ratios <= ratios.min() + 1e-12]
            q = int(near[np.argmax(-row[near])])
            self.pivot_at(r, q)
        return False

    def run_phase(self, phase: int) -> str:
        jo = 0 if phase == 2 else 1
        for _ in range(6):
            st = self.pivot_loop(phase)
            if st == "unbounded":
                return "unbounded"
            worst = self.drop_perturbation()
            if worst < -self.opts.feas_tol:
                self.dual_cleanup(jo)
                worst = float(self.T[:, -1].min()) if self.m else 0.0
            if worst >= -self.opts.feas_tol and self.entering(jo, False, phase) < 0:
                return "optimal"
        raise SolverStallError(f"phase {phase} failed to certify a verdict")

    def crash(self):
        """Opening pivot whose ratio test can exit on a positive-rhs row."""
        cand = np.where(self.allowed & (self.obj[1, : self.N] < -self.opts.opt_tol))[0]
        if cand.size == 0:
            return
        rhs = self.T[:, -1]
        zero_rows = rhs <= 1e-12
        if zero_rows.any():
            blocked = (self.T[zero_rows][:, cand] > self.opts.piv_abs).any(axis=0)
            good = cand[~blocked]
        else:
            good = cand
        if good.size == 0:
            return
        q = int(good[np.argmin(self.obj[0, good])])
        r, _ = self.ratio_row(q, False)
        if r >= 0:
            self.pivot_at(r, q)


def solve_lp(problem: LpProblem, options: SimplexOptions | None = None) -> LpSolution:
    """Solve an LpProblem; deterministic for identical inputs.

    Raises SolverStallError when the iteration cap is exceeded or the final
    basis cannot be certified; that is distinct from the three statuses.
    """
    opts = options or SimplexOptions()
    std = _Standardized(problem)
    tab = _Tableau(std, opts)

    if tab.m == 0:
        # only bounds; optimum at y = 0 unless some cost still improves
        if (std.c > opts.opt_tol).any():
            return LpSolution("unbounded", None, None, 0)
        y = np.zeros(std.n_std)
        x = std.map_back(y)
        return LpSolution("optimal", x, float(problem.objective @ x), 0)

    tab.refactor()
    if tab.n_art:
        tab.crash()
        st = tab.run_phase(1)
        if tab.obj[1, -1] < -1e-7:
            return LpSolution("infeasible", None, None, tab.iters)
        tab.allowed[tab.n_struct + tab.m_ge:] = False
        for r in range(tab.m):
            if tab.basis[r] >= tab.n_struct + tab.m_ge:
                row = tab.T[r, : tab.n_struct + tab.m_ge]
                nz = np.where(np.abs(row) > 1e-9)[0]
                if nz.size:
                    tab.pivot_at(r, int(nz[0]))
        tab.refactor()
    st = tab.run_phase(2)
    if st == "unbounded":
        return LpSolution("unbounded", None, None, tab.iters)

    y = np.zeros(tab.N)
    y[tab.basis] = np.maximum(tab.T[:, -1], 0.0)
    x = std.map_back(y[: std.n_std])
    _certify(problem, x, opts.feas_tol)
    return LpSolution("optimal", x, float(problem.objective @ x), tab.iters)


def _certify(prob: LpProblem, x: np.ndarray, tol: float):
    """Row-scaled feasibility check of a claimed-optimal point."""

    def scale(coeffs):
        return np.maximum(1.0, np.abs(coeffs).max(axis=1, initial=0.0))

    if prob.ineq_coeffs.shape[0]:
        resid = prob.ineq_coeffs @ x - prob.ineq_rhs
        if (resid / scale(prob.ineq_coeffs) < -tol).any():
            raise SolverStallError("optimal point failed inequality certification")
    if prob.eq_coeffs.shape[0]:
        resid = np.abs(prob.eq_coeffs @ x - prob.eq_rhs)
        if (resid / scale(prob.eq_coeffs) > tol).any():
            raise SolverStallError("optimal point failed equality certification")
    lo_ok = x >= np.where(np.isfinite(prob.lo), prob.lo - tol * np.maximum(1, np.abs(prob.lo)), -INF)
    hi_ok = x <= np.where(np.isfinite(prob.hi), prob.hi + tol * np.maximum(1, np.abs(prob.hi)), INF)
    if not (lo_ok.all() and hi_ok.all()):
        raise SolverStallError("optimal point failed bound certification")


def dump_problem(problem: LpProblem) -> str:
    """Fixed-column MPS-like text form; layout documented in docs/lp-dump-format.md."""
    lines = []
    lines.append(f"NAME    {problem.name[:60]}")
    lines.append("* OBJSENSE MAX")
    lines.append("ROWS")
    lines.append(" N  OBJ")
    for r in range(problem.ineq_coeffs.shape[0]):
        lines.append(f" G  R{r + 1:07d}")
    for r in range(problem.eq_coeffs.shape[0]):
        lines.append(f" E  E{r + 1:07d}")
    lines.append("COLUMNS")

    def val(v: float) -> str:
        return f"{v:+.17e}"

    for j in range(problem.n):
        name = f"X{j + 1:07d}"
        if problem.objective[j] != 0.0:
            lines.append(f"    {name}  OBJ       {val(problem.objective[j])}")
        for r in range(problem.ineq_coeffs.shape[0]):
            v = problem.ineq_coeffs[r, j]
            if v != 0.0:
                lines.append(f"    {name}  R{r + 1:07d}  {val(v)}")
        for r in range(problem.eq_coeffs.shape[0]):
            v = problem.eq_coeffs[r, j]
            if v != 0.0:
                lines.append(f"    {name}  E{r + 1:07d}  {val(v)}")
    lines.append("RHS")
    for r in range(problem.ineq_coeffs.shape[0]):
        if problem.ineq_rhs[r] != 0.0:
            lines.append(f"    RHS       R{r + 1:07d}  {val(problem.ineq_rhs[r])}")
    for r in range(problem.eq_coeffs.shape[0]):
        if problem.eq_rhs[r] != 0.0:
            lines.append(f"    RHS       E{r + 1:07d}  {val(problem.eq_rhs[r])}")
    lines.append("BOUNDS")
    for j in range(problem.n):
        name = f"X{j + 1:07d}"
        lo, hi = problem.lo[j], problem.hi[j]
        if lo == -INF and hi == INF:
            lines.append(f" FR BND       {name}")
            continue
        if lo != 0.0:
            if lo == -INF:
                lines.append(f" MI BND       {name}")
            else:
                lines.append(f" LO BND       {name}  {val(lo)}")
        if hi < INF:
            lines.append(f" UP BND       {name}  {val(hi)}")
    lines.append("ENDATA")
    return "\n".join(lines) + "\n"
