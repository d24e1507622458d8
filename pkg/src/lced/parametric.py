"""One-parameter parametric LP: critical regions of ``min (c + theta*e)'x, Ax = b, x >= 0``.

The parameter lives in [0, 1].  On a critical region the optimal basis is
fixed, so the primal vertex is constant and the optimal value is affine in
theta.  The region around a given theta is read off the reduced costs of the
optimal basis, which are themselves affine in theta.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg as sla

from .errors import InfeasibleError, RegionLimitError
from .lp import LPInstance, Status, simplex_solve

EPS_STEP = 1e-9
MAX_REGIONS = 10_000
_VALUE_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class ParametricForm:
    """Standard-form LP whose cost vector is ``c_const + theta * c_param``.

    ``recover`` and ``shift`` map a standard-form point back to the variables
    of the LP it was built from: ``x = shift + recover @ x_std``.  The
    ``offset_*`` terms carry the objective contribution of that shift.
    """

    A: np.ndarray
    b: np.ndarray
    c_const: np.ndarray
    c_param: np.ndarray
    recover: np.ndarray
    shift: np.ndarray
    offset_const: float = 0.0
    offset_param: float = 0.0
    names: tuple[str, ...] = ()

    @property
    def n_cols(self) -> int:
        return self.A.shape[1]

    def column(self, j: int) -> np.ndarray:
        return self.A[:, j]

    def cost(self, theta: float) -> np.ndarray:
        return self.c_const + theta * self.c_param

    def value(self, x_std: np.ndarray, theta: float) -> float:
        return float(self.cost(theta) @ x_std + self.offset_const + theta * self.offset_param)

    def to_lp(self, theta: float) -> LPInstance:
        n = self.n_cols
        return LPInstance(self.cost(theta), np.zeros((0, n)), np.zeros(0), self.A, self.b,
                          np.zeros(n), np.full(n, np.inf), self.names)

    def original_x(self, x_std: np.ndarray) -> np.ndarray:
        return self.shift + self.recover @ x_std


@dataclass(frozen=True, eq=False)
class CriticalRegion:
    """Parameter interval with a fixed optimal basis.

    ``x_star`` is the basic solution in standard-form columns (nonbasic
    columns at zero) and ``x`` the same point in the source LP's variables.
    The optimal value on the interval is ``alpha + beta * theta``.
    """

    theta_lo: float
    theta_hi: float
    active_set: tuple[int, ...]
    x_star: np.ndarray
    x: np.ndarray
    alpha: float
    beta: float
    basis: tuple[int, ...] = field(default=(), repr=False)

    @property
    def value_affine(self) -> tuple[float, float]:
        return self.alpha, self.beta

    def value_at(self, theta: float) -> float:
        return self.alpha + self.beta * theta

    def contains(self, theta: float) -> bool:
        return self.theta_lo <= theta <= self.theta_hi


def to_parametric_form(lp: LPInstance, c_tilde, e_tilde) -> ParametricForm:
    """Rewrite ``lp`` with objective ``theta*c_tilde + (1-theta)*e_tilde`` in standard form.

    The objective of ``lp`` itself is ignored.  Fixed variables are
    substituted out, finite lower bounds shifted to zero, finite upper bounds
    become rows with their own slack, free variables are split in two.
    """
    c_tilde = np.asarray(c_tilde, dtype=float)
    e_tilde = np.asarray(e_tilde, dtype=float)
    n = lp.n_vars
    if c_tilde.shape != (n,) or e_tilde.shape != (n,):
        raise ValueError("objective vectors must match the LP's variables")

    shift = np.zeros(n)
    cols: list[np.ndarray] = []  # columns of the recover matrix
    names: list[str] = []
    upper_rows: list[tuple[int, float]] = []  # (std column, bound) for x' <= ub rows
    for j in range(n):
        lo, hi = lp.lo[j], lp.hi[j]
        unit = np.zeros(n)
        name = lp.var_names[j]
        if lo == hi:
            shift[j] = lo
        elif np.isfinite(lo):
            shift[j] = lo
            unit[j] = 1.0
            cols.append(unit)
            names.append(name)
            if np.isfinite(hi):
                upper_rows.append((len(cols) - 1, hi - lo))
        elif np.isfinite(hi):
            shift[j] = hi
            unit[j] = -1.0
            cols.append(unit)
            names.append(name + "-")
        else:
            unit[j] = 1.0
            cols.append(unit.copy())
            names.append(name + "+")
            unit[j] = -1.0
            cols.append(unit)
            names.append(name + "-")
    M = np.array(cols).T if cols else np.zeros((n, 0))
    k = M.shape[1]
    mi, me, mu = len(lp.g), len(lp.h), len(upper_rows)
    n_std = k + mi + mu
    A = np.zeros((mi + me + mu, n_std))
    A[:mi, :k] = lp.G @ M
    A[:mi, k:k + mi] = np.eye(mi)
    A[mi:mi + me, :k] = lp.H @ M
    b = np.concatenate([lp.g - lp.G @ shift, lp.h - lp.H @ shift, np.zeros(mu)])
    for r, (col, ub) in enumerate(upper_rows):
        A[mi + me + r, col] = 1.0
        A[mi + me + r, k + mi + r] = 1.0
        b[mi + me + r] = ub
    names += [f"s_ineq{i}" for i in range(mi)] + [f"s_ub{r}" for r in range(mu)]
    recover = np.hstack([M, np.zeros((n, mi + mu))])

    param = c_tilde - e_tilde
    c_const = np.concatenate([M.T @ e_tilde, np.zeros(mi + mu)])
    c_param = np.concatenate([M.T @ param, np.zeros(mi + mu)])
    return ParametricForm(A, b, c_const, c_param, recover, shift,
                          float(e_tilde @ shift), float(param @ shift), tuple(names))


def _basis_matrix(form: ParametricForm, basis: Sequence[int]) -> np.ndarray:
    m, n = form.A.shape
    B = np.zeros((m, len(basis)))
    for k, j in enumerate(basis):
        if j < n:
            B[:, k] = form.A[:, j]
        else:
            B[j - n, k] = 1.0  # artificial kept for a redundant row
    return B


def critical_region(form: ParametricForm, theta0: float, warm_basis: Sequence[int] | None = None,
                    side: int = +1) -> CriticalRegion:
    """Critical region containing ``theta0``.

    When ``theta0`` sits on a boundary between regions the one extending to
    the right is returned (``side=-1`` selects the left one instead).  At
    ``theta0 == 1`` the left region is returned since nothing lies to the right.
    """
    if not 0.0 <= theta0 <= 1.0:
        raise ValueError(f"theta0={theta0} outside [0, 1]")
    if theta0 >= 1.0:
        side = -1
    sol = simplex_solve(form.to_lp(theta0), warm_basis, secondary=side * form.c_param)
    if sol.status is not Status.OPTIMAL:
        raise InfeasibleError(f"parametric LP is {sol.status.value} at theta={theta0}")
    basis = sol.basis
    n = form.n_cols
    B = _basis_matrix(form, basis)
    lu = sla.lu_factor(B)
    x_b = sla.lu_solve(lu, form.b)
    x_star = np.zeros(n)
    struct = [k for k, j in enumerate(basis) if j < n]
    x_star[[basis[k] for k in struct]] = x_b[struct]
    x_star[np.abs(x_star) < 1e-12 * max(1.0, np.abs(x_b).max(initial=0.0))] = 0.0

    cB_const = np.array([form.c_const[j] if j < n else 0.0 for j in basis])
    cB_param = np.array([form.c_param[j] if j < n else 0.0 for j in basis])
    y_const = sla.lu_solve(lu, cB_const, trans=1)
    y_param = sla.lu_solve(lu, cB_param, trans=1)
    d_const = form.c_const - form.A.T @ y_const
    d_param = form.c_param - form.A.T @ y_param
    nonbasic = np.ones(n, dtype=bool)
    nonbasic[[j for j in basis if j < n]] = False

    scale = max(1.0, float(np.abs(form.c_const).max(initial=0.0)), float(np.abs(form.c_param).max(initial=0.0)))
    tiny = 1e-12 * scale
    lo, hi = 0.0, 1.0
    # d_const_j + theta * d_param_j >= 0 for every nonbasic column
    for j in np.flatnonzero(nonbasic):
        dp = d_param[j]
        if dp > tiny:
            lo = max(lo, -d_const[j] / dp)
        elif dp < -tiny:
            hi = min(hi, -d_const[j] / dp)
    lo = min(lo, theta0)
    hi = max(hi, theta0)

    alpha = float(form.c_const @ x_star + form.offset_const)
    beta = float(form.c_param @ x_star + form.offset_param)
    active = tuple(sorted(int(j) for j in basis if j < n))
    return CriticalRegion(float(lo), float(hi), active, x_star, form.original_x(x_star),
                          alpha, beta, tuple(basis))


def _same_piece(a: CriticalRegion, b: CriticalRegion) -> bool:
    scale = max(1.0, abs(a.alpha), abs(a.beta), abs(b.alpha), abs(b.beta))
    return abs(a.alpha - b.alpha) <= _VALUE_TOL * scale and abs(a.beta - b.beta) <= _VALUE_TOL * scale


def enumerate_regions(form: ParametricForm, max_regions: int = MAX_REGIONS,
                      merge: bool = True) -> list[CriticalRegion]:
    """Sweep [0, 1] left to right and return the critical regions in order.

    Consecutive regions share their boundary point.  With ``merge`` adjacent
    bases that carry the same affine value piece (degenerate re-labelings of
    one vertex) are reported as one region.
    """
    regions: list[CriticalRegion] = []
    theta = 0.0
    basis = None
    while True:
        if len(regions) >= max_regions:
            raise RegionLimitError(max_regions)
        reg = critical_region(form, theta, warm_basis=basis)
        hi = reg.theta_hi
        if hi >= 1.0:
            hi = 1.0
        elif hi - theta <= 1e-12:
            hi = min(1.0, theta + EPS_STEP)  # stalled on a sliver; step past it
        reg = CriticalRegion(theta, hi, reg.active_set, reg.x_star, reg.x, reg.alpha, reg.beta, reg.basis)
        if merge and regions and _same_piece(regions[-1], reg):
            prev = regions[-1]
            regions[-1] = CriticalRegion(prev.theta_lo, hi, prev.active_set, prev.x_star, prev.x,
                                         prev.alpha, prev.beta, prev.basis)
        else:
            regions.append(reg)
        if hi >= 1.0:
            return regions
        theta = hi
        basis = reg.basis


def value_function(regions: Sequence[CriticalRegion], theta: float) -> float:
    """Evaluate the piecewise-affine optimal value at ``theta``."""
    for reg in regions:
        if reg.theta_lo <= theta <= reg.theta_hi:
            return reg.value_at(theta)
    raise ValueError(f"theta={theta} not covered by the regions")
