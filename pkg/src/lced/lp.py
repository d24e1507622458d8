"""Dense-basis revised simplex with bounded variables and explicit basis reporting.

The solver works on ``min c'x  s.t.  G x <= g,  H x = h,  lo <= x <= hi``.
Inequalities receive slack columns, so internally every row is an equality
and each column carries its own (possibly infinite) bounds.  The basis is
kept as an LU factorization plus a product-form eta file that is rebuilt
every ``refactor_every`` pivots.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy.linalg as sla

from .errors import NumericalError

TOL_PIVOT = 1e-9
REFACTOR_EVERY = 100


@dataclass
class SolverSettings:
    """Process-wide solver defaults; the CLI overrides them from flags."""

    tol_feas: float = 1e-9
    tol_opt: float = 1e-9
    stall_limit: int = 50


SETTINGS = SolverSettings()

_AT_LOWER, _AT_UPPER, _FREE, _BASIC = 0, 1, 2, 3


class Status(str, enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass(frozen=True, eq=False)
class LPInstance:
    """A linear program with inequality rows, equality rows and variable bounds."""

    objective: np.ndarray
    G: np.ndarray
    g: np.ndarray
    H: np.ndarray
    h: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    var_names: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        n = len(self.objective)
        for name in ("objective", "g", "h", "lo", "hi"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float).reshape(-1))
        for name in ("G", "H"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float).reshape(-1, n))
        if self.G.shape != (len(self.g), n) or self.H.shape != (len(self.h), n):
            raise ValueError("constraint matrix dimensions do not match")
        if self.lo.shape != (n,) or self.hi.shape != (n,):
            raise ValueError("bounds must have one entry per variable")
        if np.any(self.lo > self.hi):
            raise ValueError("lower bound exceeds upper bound")
        if np.any(self.lo == np.inf) or np.any(self.hi == -np.inf):
            raise ValueError("bounds must not exclude every finite value")
        if not self.var_names:
            object.__setattr__(self, "var_names", tuple(f"x{j}" for j in range(n)))

    @classmethod
    def build(cls, c, G=None, g=None, H=None, h=None, bounds=None, var_names: Sequence[str] = ()):
        """Convenience constructor; missing parts become empty, default bounds are ``[0, inf)``."""
        c = np.asarray(c, dtype=float)
        n = len(c)
        G = np.zeros((0, n)) if G is None else np.asarray(G, dtype=float)
        H = np.zeros((0, n)) if H is None else np.asarray(H, dtype=float)
        g = np.zeros(0) if g is None else g
        h = np.zeros(0) if h is None else h
        if bounds is None:
            lo, hi = np.zeros(n), np.full(n, np.inf)
        else:
            lo = np.array([-np.inf if b[0] is None else b[0] for b in bounds], dtype=float)
            hi = np.array([np.inf if b[1] is None else b[1] for b in bounds], dtype=float)
        return cls(c, G, g, H, h, lo, hi, tuple(var_names))

    @property
    def n_vars(self) -> int:
        return len(self.objective)

    @property
    def n_rows(self) -> int:
        return len(self.g) + len(self.h)

    def with_objective(self, c) -> LPInstance:
        return LPInstance(np.asarray(c, dtype=float), self.G, self.g, self.H, self.h,
                          self.lo, self.hi, self.var_names)

    def with_rows(self, G_extra=None, g_extra=None) -> LPInstance:
        G_extra = np.zeros((0, self.n_vars)) if G_extra is None else np.atleast_2d(G_extra)
        g_extra = np.zeros(0) if g_extra is None else np.atleast_1d(g_extra)
        return LPInstance(self.objective, np.vstack([self.G, G_extra]), np.concatenate([self.g, g_extra]),
                          self.H, self.h, self.lo, self.hi, self.var_names)


@dataclass(frozen=True, eq=False)
class LPSolution:
    """Solved state.

    ``basis`` indexes the solver's column space: structural variables first,
    then one slack per inequality row, then (only for redundant equality rows)
    an artificial per row.  ``duals`` holds one multiplier per row, inequality
    rows first, with ``reduced_costs = c - [G; H]' duals``.
    """

    status: Status
    x: np.ndarray
    objective_value: float
    basis: tuple[int, ...] = ()
    duals: np.ndarray = field(default_factory=lambda: np.zeros(0))
    reduced_costs: np.ndarray = field(default_factory=lambda: np.zeros(0))
    iterations: int = 0

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL


class _Factor:
    """LU of the basis matrix with a product-form eta file on top."""

    def __init__(self, B: np.ndarray):
        if B.shape[0] == 0:
            self.lu = None
        else:
            lu, piv = sla.lu_factor(B, check_finite=False)
            diag = np.abs(np.diag(lu))
            if diag.min() <= 1e-11 * max(1.0, diag.max()):
                raise NumericalError("singular basis matrix")
            self.lu = (lu, piv)
        self.etas: list[tuple[int, np.ndarray]] = []

    def ftran(self, a: np.ndarray) -> np.ndarray:
        if self.lu is None:
            return a.copy()
        z = sla.lu_solve(self.lu, a, check_finite=False)
        for r, alpha in self.etas:
            zr = z[r] / alpha[r]
            z -= alpha * zr
            z[r] = zr
        return z

    def btran(self, c: np.ndarray) -> np.ndarray:
        if self.lu is None:
            return c.copy()
        w = c.astype(float, copy=True)
        for r, alpha in reversed(self.etas):
            w[r] = (w[r] - (alpha @ w - alpha[r] * w[r])) / alpha[r]
        return sla.lu_solve(self.lu, w, trans=1, check_finite=False)

    def push(self, r: int, alpha: np.ndarray) -> None:
        self.etas.append((r, alpha.copy()))


def _pow2(v: np.ndarray) -> np.ndarray:
    return np.exp2(np.round(np.log2(v)))


def geometric_scaling(A: np.ndarray, passes: int = 4) -> tuple[np.ndarray, np.ndarray]:
    """Row and column factors (powers of two) from alternating geometric-mean passes."""
    m, n = A.shape
    R, S = np.ones(m), np.ones(n)
    absA = np.abs(A)
    for _ in range(passes):
        M = absA * R[:, None] * S[None, :]
        for i in range(m):
            nz = M[i][M[i] > 0]
            if nz.size:
                R[i] /= math.sqrt(nz.max() * nz.min())
        M = absA * R[:, None] * S[None, :]
        for j in range(n):
            nz = M[:, j][M[:, j] > 0]
            if nz.size:
                S[j] /= math.sqrt(nz.max() * nz.min())
    return _pow2(R), _pow2(S)


class _Engine:
    """Bounded-variable primal simplex on ``A x = b, l <= x <= u`` (already scaled)."""

    def __init__(self, A, b, c, l, u, c2, tol_feas, tol_opt, stall_limit,
                 refactor_every=REFACTOR_EVERY):
        self.m, self.n = A.shape
        self.A, self.b = A, b
        self.c, self.c2 = c, c2
        self.l, self.u = l.copy(), u.copy()
        self.tol_feas, self.tol_opt = tol_feas, tol_opt
        self.stall_limit = stall_limit
        self.refactor_every = refactor_every
        self.iterations = 0

    # -- state helpers ------------------------------------------------------
    def _nonbasic_start(self) -> np.ndarray:
        x = np.zeros(self.n)
        self.state = np.full(self.n, _FREE)
        fin_l, fin_u = np.isfinite(self.l), np.isfinite(self.u)
        x[fin_l] = self.l[fin_l]
        self.state[fin_l] = _AT_LOWER
        only_u = ~fin_l & fin_u
        x[only_u] = self.u[only_u]
        self.state[only_u] = _AT_UPPER
        return x

    def _refactor(self) -> None:
        self.fac = _Factor(self.A[:, self.basis])
        nb = np.ones(self.n, dtype=bool)
        nb[self.basis] = False
        rhs = self.b - self.A[:, nb] @ self.x[nb]
        self.x[self.basis] = self.fac.ftran(rhs)

    def try_warm(self, basis: Sequence[int]) -> bool:
        basis = [int(j) for j in basis]
        if len(basis) != self.m or len(set(basis)) != self.m or any(not 0 <= j < self.n for j in basis):
            return False
        self.x = self._nonbasic_start()
        self.basis = basis
        try:
            self._refactor()
        except NumericalError:
            return False
        xb = self.x[basis]
        tol = self.tol_feas * max(1.0, float(np.abs(self.b).max(initial=0.0)))
        if np.any(xb < self.l[basis] - tol) or np.any(xb > self.u[basis] + tol):
            return False
        self.state[basis] = _BASIC
        return True

    # -- main loop -----------------------------------------------------------
    def _iterate(self, cost: np.ndarray, cost2: np.ndarray | None, phase1: bool) -> Status:
        """Primal simplex iterations from the current basic feasible solution."""
        max_iter = 50 * (self.m + self.n) + 1000
        stalled = 0
        use_bland = False
        cscale = max(1.0, float(np.abs(cost).max(initial=0.0)))
        c2scale = max(1.0, float(np.abs(cost2).max(initial=0.0))) if cost2 is not None else 1.0
        idx = np.arange(self.n)
        while True:
            if self.iterations > max_iter:
                raise NumericalError("simplex iteration limit exceeded")
            y = self.fac.btran(cost[self.basis])
            d = cost - self.A.T @ y
            movable = (self.state != _BASIC) & (self.l < self.u)
            tol = self.tol_opt * cscale
            # improvement rate per unit step in the allowed direction
            gain = np.zeros(self.n)
            lower = movable & (self.state == _AT_LOWER)
            upper = movable & (self.state == _AT_UPPER)
            free = movable & (self.state == _FREE)
            gain[lower] = -d[lower]
            gain[upper] = d[upper]
            gain[free] = np.abs(d[free])
            cand = gain > tol
            direction = np.where(upper, -1.0, np.where(free, -np.sign(d), 1.0))
            if not cand.any() and cost2 is not None:
                # lexicographic tie-break: among columns with zero primary reduced
                # cost, improve the secondary objective
                y2 = self.fac.btran(cost2[self.basis])
                d2 = cost2 - self.A.T @ y2
                flat = movable & (np.abs(d) <= tol)
                gain = np.zeros(self.n)
                gain[flat & lower] = -d2[flat & lower]
                gain[flat & upper] = d2[flat & upper]
                gain[flat & free] = np.abs(d2[flat & free])
                cand = gain > self.tol_opt * c2scale
                direction = np.where(upper, -1.0, np.where(free, -np.sign(d2), 1.0))
            if not cand.any():
                return Status.OPTIMAL
            if use_bland:
                q = int(idx[cand][0])
            else:
                q = int(idx[cand][np.argmax(gain[cand])])
            dirq = float(direction[q])

            alpha = self.fac.ftran(self.A[:, q])
            rate = -dirq * alpha  # d x_B / d step
            xb = self.x[self.basis]
            lb, ub = self.l[self.basis], self.u[self.basis]
            ratios = np.full(self.m, np.inf)
            dec = rate < -TOL_PIVOT
            inc = rate > TOL_PIVOT
            with np.errstate(invalid="ignore", divide="ignore"):
                ratios[dec] = (xb[dec] - lb[dec]) / -rate[dec]
                ratios[inc] = (ub[inc] - xb[inc]) / rate[inc]
            ratios = np.where(np.isnan(ratios), np.inf, np.maximum(ratios, 0.0))
            t_flip = self.u[q] - self.l[q]
            t_min = float(ratios.min(initial=np.inf))
            if t_flip <= t_min:
                if not np.isfinite(t_flip):
                    return Status.UNBOUNDED
                step, r = t_flip, -1
            else:
                step = t_min
                ties = np.flatnonzero(ratios <= t_min + 1e-12 * max(1.0, t_min))
                if use_bland:
                    r = int(ties[np.argmin(np.asarray(self.basis)[ties])])
                else:
                    r = int(ties[np.argmax(np.abs(alpha[ties]))])

            self.iterations += 1
            if step <= self.tol_feas:
                stalled += 1
                if stalled >= self.stall_limit:
                    use_bland = True
            else:
                stalled = 0
                use_bland = False

            self.x[self.basis] = xb + rate * step
            if r < 0:
                self.x[q] = self.u[q] if dirq > 0 else self.l[q]
                self.state[q] = _AT_UPPER if dirq > 0 else _AT_LOWER
                continue
            self.x[q] = self.x[q] + dirq * step
            leaving = self.basis[r]
            if rate[r] < 0:
                self.x[leaving], self.state[leaving] = self.l[leaving], _AT_LOWER
            else:
                self.x[leaving], self.state[leaving] = self.u[leaving], _AT_UPPER
            self.basis[r] = q
            self.state[q] = _BASIC
            self.fac.push(r, alpha)
            if len(self.fac.etas) >= self.refactor_every:
                self._refactor()

    def solve(self, warm_basis=None, crash: dict[int, int] | None = None) -> Status:
        if warm_basis is not None and self.try_warm(warm_basis):
            return self._iterate(self.c, self.c2, phase1=False)
        return self._two_phase(crash or {})

    def _two_phase(self, crash: dict[int, int]) -> Status:
        m, n = self.m, self.n
        x = self._nonbasic_start()
        resid = self.b - self.A @ x
        # crash: rows with a usable unit slack column start with it basic
        basis: list[int] = []
        art_rows: list[int] = []
        for i in range(m):
            j = crash.get(i)
            if j is not None and self.A[i, j] > 0:
                val = x[j] + resid[i] / self.A[i, j]
                if self.l[j] - self.tol_feas <= val <= self.u[j] + self.tol_feas:
                    x[j] = val
                    basis.append(j)
                    continue
            basis.append(-1)
            art_rows.append(i)
        n_art = len(art_rows)
        A_ext = np.hstack([self.A, np.zeros((m, n_art))])
        for k, i in enumerate(art_rows):
            sign = 1.0 if resid[i] >= 0 else -1.0
            A_ext[i, n + k] = sign
            basis[i] = n + k
        # recompute residuals with the crash values in place
        l_ext = np.concatenate([self.l, np.zeros(n_art)])
        u_ext = np.concatenate([self.u, np.full(n_art, np.inf)])
        x_ext = np.concatenate([x, np.zeros(n_art)])
        state = np.concatenate([self.state, np.full(n_art, _BASIC)])
        for j in basis:
            state[j] = _BASIC

        self.A_orig, self.l_orig, self.u_orig = self.A, self.l, self.u
        self.A, self.l, self.u, self.x, self.state = A_ext, l_ext, u_ext, x_ext, state
        self.n = n + n_art
        self.basis = basis
        self._refactor()

        if n_art:
            cost1 = np.concatenate([np.zeros(n), np.ones(n_art)])
            self._iterate(cost1, None, phase1=True)
            infeas = float(self.x[n:].sum())
            if infeas > self.tol_feas * max(1.0, float(np.abs(self.b).max(initial=0.0))):
                return Status.INFEASIBLE
            self.u[n:] = 0.0
            self.x[n:] = 0.0
            self._drive_out_artificials(n)
            self._refactor()
        c_ext = np.concatenate([self.c, np.zeros(n_art)])
        c2_ext = None if self.c2 is None else np.concatenate([self.c2, np.zeros(n_art)])
        return self._iterate(c_ext, c2_ext, phase1=False)

    def _drive_out_artificials(self, n_struct: int) -> None:
        for r in range(self.m):
            j = self.basis[r]
            if j < n_struct:
                continue
            e = np.zeros(self.m)
            e[r] = 1.0
            row = self.fac.btran(e) @ self.A[:, :n_struct]
            row[self.state[:n_struct] == _BASIC] = 0.0
            q = int(np.argmax(np.abs(row)))
            if abs(row[q]) <= 1e-7:
                continue  # redundant row; artificial stays basic at zero
            alpha = self.fac.ftran(self.A[:, q])
            self.state[j] = _AT_LOWER
            self.basis[r] = q
            self.state[q] = _BASIC
            self.fac.push(r, alpha)
            self._refactor()


def simplex_solve(lp: LPInstance, warm_basis: Sequence[int] | None = None, *,
                  secondary: np.ndarray | None = None, scale: bool = True,
                  tol_feas: float | None = None, tol_opt: float | None = None,
                  stall_limit: int | None = None) -> LPSolution:
    """Solve ``lp`` with the revised simplex method.

    ``warm_basis`` (indices into the solver column space, see
    :class:`LPSolution`) seeds phase 2 when it is a feasible basis; otherwise it
    is ignored.  ``secondary`` is an optional tie-break objective: among the
    optimal bases of the primary objective the solver settles on one that is
    also optimal for the secondary one.
    """
    tol_feas = SETTINGS.tol_feas if tol_feas is None else tol_feas
    tol_opt = SETTINGS.tol_opt if tol_opt is None else tol_opt
    stall_limit = SETTINGS.stall_limit if stall_limit is None else stall_limit
    n, mi, me = lp.n_vars, len(lp.g), len(lp.h)
    m = mi + me
    A = np.zeros((m, n + mi))
    A[:mi, :n] = lp.G
    A[mi:, :n] = lp.H
    A[:mi, n:] = np.eye(mi)
    b = np.concatenate([lp.g, lp.h])
    c = np.concatenate([lp.objective, np.zeros(mi)])
    c2 = None if secondary is None else np.concatenate([np.asarray(secondary, float), np.zeros(mi)])
    l = np.concatenate([lp.lo, np.zeros(mi)])
    u = np.concatenate([lp.hi, np.full(mi, np.inf)])

    if scale and m:
        R, S = geometric_scaling(A)
    else:
        R, S = np.ones(m), np.ones(n + mi)
    As = A * R[:, None] * S[None, :]
    bs = b * R
    cs = c * S
    obj_scale = 2.0 ** round(math.log2(np.abs(cs).max())) if cs.any() else 1.0
    cs = cs / obj_scale
    c2s = None
    if c2 is not None:
        c2s = c2 * S
        if c2s.any():
            c2s = c2s / 2.0 ** round(math.log2(np.abs(c2s).max()))
    with np.errstate(invalid="ignore"):
        ls, us = l / S, u / S

    eng = _Engine(As, bs, cs, ls, us, c2s, tol_feas=tol_feas, tol_opt=tol_opt, stall_limit=stall_limit)
    crash = {i: n + i for i in range(mi)}
    status = eng.solve(warm_basis=warm_basis, crash=crash)
    if status is not Status.OPTIMAL:
        return LPSolution(status, np.full(n, np.nan), math.nan, iterations=eng.iterations)

    x_full = eng.x[: n + mi] * S
    x = x_full[:n]
    # snap nonbasic variables exactly onto their bounds
    for j in range(n):
        if eng.state[j] == _AT_LOWER:
            x[j] = lp.lo[j]
        elif eng.state[j] == _AT_UPPER:
            x[j] = lp.hi[j]
    y_s = eng.fac.btran(np.concatenate([cs, np.zeros(eng.n - n - mi)])[eng.basis])
    duals = y_s * R * obj_scale
    reduced = lp.objective - np.concatenate([lp.G, lp.H]).T @ duals if m else lp.objective.copy()
    return LPSolution(Status.OPTIMAL, x, float(lp.objective @ x), tuple(int(j) for j in eng.basis),
                      duals, reduced, eng.iterations)


def dump_lp(lp: LPInstance, path: str | Path) -> Path:
    """Write ``lp`` as a plain fixed-width text file for bug reports."""
    path = Path(path)

    def num(v: float) -> str:
        return f"{v:>24.17g}"

    lines = [f"LP {lp.n_vars} vars {len(lp.g)} ineq {len(lp.h)} eq"]
    lines.append("VARIABLES")
    for j, name in enumerate(lp.var_names):
        lines.append(f"{j:>6d} {name:<24s}{num(lp.objective[j])}{num(lp.lo[j])}{num(lp.hi[j])}")
    for tag, M, rhs in (("INEQ", lp.G, lp.g), ("EQ", lp.H, lp.h)):
        lines.append(tag)
        for i in range(M.shape[0]):
            nz = np.flatnonzero(M[i])
            terms = " ".join(f"{j}:{M[i, j]:.17g}" for j in nz)
            lines.append(f"{i:>6d} {num(rhs[i])} | {terms}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path
