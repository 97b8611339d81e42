"""Phase-I primal simplex for LP feasibility.

Solves ``find x: A_ub x <= b_ub, A_eq x = b_eq, lb <= x <= ub`` by
minimizing the total bound violation of a bounded-variable tableau.  Each
constraint row gets a logical variable ``r_i = a_i . x`` whose bounds
encode the row sense, so the starting basis (all logicals) needs no
artificial columns.  Nonbasic variables always sit on a finite bound, or at
zero when free.

Entering variables are chosen by the largest reduced cost (Dantzig) and the
solver falls back to Bland's rule permanently once progress stalls, which
guarantees termination.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

PIVOT_TOL = 1e-9
COST_TOL = 1e-11


class SolverError(RuntimeError):
    """The phase-I solve failed numerically; the verdict is unknown."""


@dataclass
class PhaseOneResult:
    feasible: bool
    x: np.ndarray | None
    infeasibility: float
    iterations: int
    max_violation: float


def _scale(A: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Column then row equilibration factors (powers of two, so exact)."""
    absA = np.abs(A)
    cmax = absA.max(axis=0) if A.shape[0] else np.ones(A.shape[1])
    col = np.where(cmax > 0, np.exp2(-np.round(np.log2(np.where(cmax > 0, cmax, 1.0)))), 1.0)
    rmax = (absA * col).max(axis=1) if A.shape[1] else np.ones(A.shape[0])
    row = np.where(rmax > 0, np.exp2(-np.round(np.log2(np.where(rmax > 0, rmax, 1.0)))), 1.0)
    return row, col


def phase_one(A_ub=None, b_ub=None, A_eq=None, b_eq=None, lb=None, ub=None, *, n_vars=None,
              tol: float = 1e-6, max_iter: int | None = None, bland_after: int = 50) -> PhaseOneResult:
    """Decide feasibility of a linear system.

    Returns a result whose ``x`` (when feasible) satisfies every row and
    bound within ``tol`` after row/column equilibration.  Raises
    :class:`SolverError` on non-convergence or numerical breakdown.
    """
    if n_vars is None:
        for M in (A_ub, A_eq):
            if M is not None:
                n_vars = np.asarray(M).shape[1]
                break
        else:
            n_vars = 0 if lb is None else len(lb)
    n = int(n_vars)
    A_ub = np.zeros((0, n)) if A_ub is None else np.asarray(A_ub, dtype=np.float64).reshape(-1, n)
    A_eq = np.zeros((0, n)) if A_eq is None else np.asarray(A_eq, dtype=np.float64).reshape(-1, n)
    b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=np.float64).reshape(-1)
    b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=np.float64).reshape(-1)
    lb = np.full(n, -np.inf) if lb is None else np.asarray(lb, dtype=np.float64).copy()
    ub = np.full(n, np.inf) if ub is None else np.asarray(ub, dtype=np.float64).copy()
    if len(b_ub) != A_ub.shape[0] or len(b_eq) != A_eq.shape[0] or len(lb) != n or len(ub) != n:
        raise ValueError("inconsistent LP dimensions")

    orig = (np.vstack([A_ub, A_eq]), np.concatenate([np.full(len(b_ub), -np.inf), b_eq]),
            np.concatenate([b_ub, b_eq]), lb.copy(), ub.copy())
    # presolve: inequality rows with identical coefficients collapse to the tightest
    if len(b_ub) > 1:
        A_ub, b_ub = _merge_duplicate_rows(A_ub, b_ub)
    A = np.vstack([A_ub, A_eq])
    rlo = np.concatenate([np.full(len(b_ub), -np.inf), b_eq])
    rhi = np.concatenate([b_ub, b_eq])

    # constant rows are checked directly, singleton rows become bounds
    nnz = np.count_nonzero(A, axis=1)
    empty = nnz == 0
    if np.any(rhi[empty] < -tol) or np.any(rlo[empty] > tol):
        worst = float(max(np.max(-rhi[empty], initial=0.0), np.max(rlo[empty], initial=0.0)))
        return PhaseOneResult(False, None, worst, 0, worst)
    single = np.flatnonzero(nnz == 1)
    if single.size:
        cols = np.argmax(A[single] != 0, axis=1)
        coef = A[single, cols]
        lo_b = np.where(coef > 0, rlo[single], rhi[single]) / coef
        hi_b = np.where(coef > 0, rhi[single], rlo[single]) / coef
        np.maximum.at(lb, cols, lo_b)
        np.minimum.at(ub, cols, hi_b)
    keep = nnz > 1
    A, rlo, rhi = A[keep], rlo[keep], rhi[keep]
    if np.any(lb > ub + tol * np.maximum(1.0, np.abs(lb))):
        worst = float(np.max(lb - ub))
        return PhaseOneResult(False, None, worst, 0, worst)
    ub = np.maximum(ub, lb)

    row_s, col_s = _scale(A) if A.size else (np.ones(A.shape[0]), np.ones(n))
    T = A * row_s[:, None] * col_s[None, :]
    lo = np.concatenate([lb / col_s, rlo * row_s])
    hi = np.concatenate([ub / col_s, rhi * row_s])
    m = T.shape[0]

    basic = np.arange(n, n + m)
    nonbasic = np.arange(n)
    val = np.zeros(n + m)
    val[:n] = np.where(np.isfinite(lo[:n]), lo[:n], np.where(np.isfinite(hi[:n]), hi[:n], 0.0))
    val[:n] = np.where(np.isfinite(lo[:n]) & np.isfinite(hi[:n]) & (np.abs(hi[:n]) < np.abs(lo[:n])),
                       hi[:n], val[:n])
    val[basic] = T @ val[nonbasic]
    max_iter = max_iter or 50 * (m + n) + 1000
    status, it = _pivot_loop(T, lo, hi, val, basic, nonbasic, 1e-9, COST_TOL, PIVOT_TOL,
                             max_iter, bland_after)
    if status == _UNBOUNDED:
        raise SolverError("phase-I ratio test found an unbounded direction")
    if status == _ITERATION_CAP:
        raise SolverError(f"phase-I simplex did not converge within {max_iter} iterations")
    lo_b, hi_b = lo[basic], hi[basic]

    x = val[:n] * col_s
    viol = _max_violation(orig, x)
    xb = val[basic]
    infeas = float(np.sum(np.maximum(lo_b - xb, 0.0)) + np.sum(np.maximum(xb - hi_b, 0.0)))
    if infeas > tol:
        return PhaseOneResult(False, None, infeas, it, viol)
    if viol > tol:
        raise SolverError(f"phase-I point drifted: max scaled violation {viol:.3g} > {tol:.3g}")
    return PhaseOneResult(True, x, infeas, it, viol)


def _merge_duplicate_rows(A: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Collapse ``a.x <= b`` rows sharing ``a`` exactly into one row with the smallest ``b``."""
    key = A @ _PROBE[:A.shape[1]] if A.shape[1] <= len(_PROBE) else A.sum(axis=1)
    order = np.argsort(key, kind="stable")
    A, b, key = A[order], b[order], key[order]
    same = (key[1:] == key[:-1]) & np.all(A[1:] == A[:-1], axis=1)
    if not same.any():
        return A, b
    group = np.concatenate([[0], np.cumsum(~same)])
    tight = np.full(group[-1] + 1, np.inf)
    np.minimum.at(tight, group, b)
    return A[np.concatenate([[True], ~same])], tight


_PROBE = np.random.default_rng(20240601).standard_normal(4096)


def _max_violation(orig, x) -> float:
    A, rlo, rhi, lb, ub = orig
    # constant rows (all-zero coefficients) are measured absolutely
    scale = np.abs(A).max(axis=1) if A.size else np.ones(A.shape[0])
    scale = np.where(scale > 0, scale, 1.0)
    r = A @ x
    row_v = np.maximum(np.maximum(rlo - r, r - rhi), 0.0) / scale if len(r) else np.zeros(0)
    bnd_v = np.maximum(np.maximum(lb - x, x - ub), 0.0) / np.maximum(1.0, np.abs(x))
    return float(max(np.max(row_v, initial=0.0), np.max(bnd_v, initial=0.0)))


_DONE, _UNBOUNDED, _ITERATION_CAP = 0, 1, 2


@numba.njit(cache=True)
def _pivot_loop(T, lo, hi, val, basic, nonbasic, feas_tol, cost_tol, piv_tol, max_iter, bland_after):
    m, n = T.shape
    g = np.zeros(m)
    d = np.zeros(n)
    ratio = np.empty(m)
    target = np.empty(m)
    col = np.empty(m)
    row = np.empty(n)
    best = np.inf
    stall = 0
    bland = False
    for it in range(1, max_iter + 1):
        infeas = 0.0
        n_bad = 0
        for i in range(m):
            v = val[basic[i]]
            if v < lo[basic[i]] - feas_tol:
                g[i] = -1.0
                infeas += lo[basic[i]] - v
                n_bad += 1
            elif v > hi[basic[i]] + feas_tol:
                g[i] = 1.0
                infeas += v - hi[basic[i]]
                n_bad += 1
            else:
                g[i] = 0.0
        if n_bad == 0:
            return _DONE, it
        if infeas < best - 1e-12 * max(1.0, best):
            best = infeas
            stall = 0
        else:
            stall += 1
            if stall >= bland_after:
                bland = True
        d[:] = 0.0
        for i in range(m):
            if g[i] != 0.0:
                gi = g[i]
                for j in range(n):
                    d[j] += gi * T[i, j]
        q = -1
        score = -1.0
        for j in range(n):
            var = nonbasic[j]
            x = val[var]
            ok = (d[j] < -cost_tol and x < hi[var] - feas_tol) or (d[j] > cost_tol and x > lo[var] + feas_tol)
            if not ok:
                continue
            if bland:
                if q < 0 or var < nonbasic[q]:
                    q = j
            elif abs(d[j]) > score:
                score = abs(d[j])
                q = j
        if q < 0:
            return _DONE, it
        var_q = nonbasic[q]
        direction = 1.0 if d[q] < 0.0 else -1.0
        if direction > 0.0:
            theta = hi[var_q] - val[var_q]
        else:
            theta = val[var_q] - lo[var_q]
        leave = -1
        rmin = np.inf
        for i in range(m):
            a = T[i, q] * direction
            ratio[i] = np.inf
            if a > piv_tol:
                if g[i] < 0.0:
                    t = lo[basic[i]]
                elif g[i] == 0.0:
                    t = hi[basic[i]]
                else:
                    continue
            elif a < -piv_tol:
                if g[i] > 0.0:
                    t = hi[basic[i]]
                elif g[i] == 0.0:
                    t = lo[basic[i]]
                else:
                    continue
            else:
                continue
            if not np.isfinite(t):
                continue
            target[i] = t
            r = (t - val[basic[i]]) / a
            if r < 0.0:
                r = 0.0
            ratio[i] = r
            if r < rmin:
                rmin = r
        if rmin < theta:
            theta = rmin
            bestk = -1.0
            for i in range(m):
                if ratio[i] <= rmin + 1e-12:
                    if bland:
                        if leave < 0 or basic[i] < basic[leave]:
                            leave = i
                    elif abs(T[i, q]) > bestk:
                        bestk = abs(T[i, q])
                        leave = i
        if not np.isfinite(theta):
            return _UNBOUNDED, it
        val[var_q] += direction * theta
        for i in range(m):
            val[basic[i]] += T[i, q] * direction * theta
        if leave < 0:
            val[var_q] = hi[var_q] if direction > 0.0 else lo[var_q]
            continue
        var_r = basic[leave]
        val[var_r] = target[leave]
        p = T[leave, q]
        for i in range(m):
            col[i] = T[i, q]
        for j in range(n):
            row[j] = T[leave, j] / p
        for i in range(m):
            c = col[i]
            if c != 0.0 and i != leave:
                for j in range(n):
                    T[i, j] -= c * row[j]
                T[i, q] = c / p
        for j in range(n):
            T[leave, j] = -row[j]
        T[leave, q] = 1.0 / p
        basic[leave] = var_q
        nonbasic[q] = var_r
        if it % 64 == 0:
            for i in range(m):
                acc = 0.0
                for j in range(n):
                    acc += T[i, j] * val[nonbasic[j]]
                val[basic[i]] = acc
    return _ITERATION_CAP, max_iter
