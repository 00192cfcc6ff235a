"""Finite-difference verification of the third-order nonlinear PDE obeyed by
the log gap probability of the Pearcey process, plus the small-interval
estimates and the Wronskian non-vanishing coefficient.

For Q(t; y1, y2) = log P(no Pearcey particle in (y1, y2)) the residual of

    d^3Q/dt^3 + (1/8)(eps_E - 2 t d/dt - 2) dE^2 Q
             - (1/2) { dE^2 Q, dE dQ/dt }_{dE}   = 0

is assembled from second-order centered differences on a (t, y1, y2) lattice,
with dE = d/dy1 + d/dy2, eps_E = y1 d/dy1 + y2 d/dy2, and Wronskian
{f, g}_X = X(f) g - f X(g).  At the true surface the residual is pure
truncation error and contracts like h^2 under grid halving; a corrupted
surface fails that contraction, which is the operational check that all sign
conventions are right.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from ._quad import QuadratureSpec, thread_map
from .fredholm import IntervalUnion, NystromGrid
from .kernels import pq_tables, pearcey_pq

__all__ = [
    "QSurface", "ResidualReport", "q_surface", "pearcey_pde_residual",
    "small_interval_checks", "wronskian_coefficient", "residual_csv_lines",
]


@dataclass(frozen=True)
class QSurface:
    """Log gap probabilities on a (t, y1, y2) stencil lattice."""

    t_grid: np.ndarray
    y1_grid: np.ndarray
    y2_grid: np.ndarray
    Q: np.ndarray
    h_t: float
    h_y: float

    def scaled(self, factor):
        """Corrupted copy (for negative controls): Q multiplied by factor."""
        return replace(self, Q=self.Q * factor)


@dataclass(frozen=True)
class ResidualReport:
    t_values: np.ndarray
    residuals: np.ndarray
    max_abs: float
    h_t: float
    h_y: float
    y1: float
    y2: float


def _log_gap_batch(t, intervals, m, spec):
    """log det(I - K_E) for many single intervals at one time, sharing the
    p/q tabulation across all Nystrom nodes."""
    grids = [NystromGrid.build(IntervalUnion(iv), m) for iv in intervals]
    all_nodes = np.concatenate([g.nodes for g in grids])
    P, Q = pq_tables(t, all_nodes, spec)
    out = []
    off = 0
    for g in grids:
        n = g.nodes.size
        sl = slice(off, off + n)
        off += n
        x = g.nodes
        num = (np.outer(P[0][sl], Q[2][sl]) - np.outer(P[1][sl], Q[1][sl])
               + np.outer(P[2][sl], Q[0][sl]) - t * np.outer(P[0][sl], Q[0][sl]))
        den = x[None, :] - x[:, None]
        K = np.where(np.eye(n, dtype=bool), 0.0, num / np.where(den == 0, 1.0, den))
        diag = (P[0][sl] * Q[3][sl] - P[1][sl] * Q[2][sl]
                + P[2][sl] * Q[1][sl] - t * P[0][sl] * Q[1][sl])
        K[np.arange(n), np.arange(n)] = diag
        sw = np.sqrt(g.weights)
        sign, ld = np.linalg.slogdet(np.eye(n) - sw[:, None] * K * sw[None, :])
        if sign <= 0:
            raise ArithmeticError("non-positive determinant while tabulating Q surface")
        out.append(ld)
    return out


def q_surface(t_range, E_center: float, E_halfwidth: float, h_t: float,
              h_y: float, m: int = 48, spec: QuadratureSpec | None = None,
              y_extent: int = 2, threads: int = 1) -> QSurface:
    """Tabulate Q(t, y1, y2) = log gap on the stencil lattice.

    t runs over t_range at spacing h_t; the endpoint grids are
    y1 in E_center - E_halfwidth + h_y * {-y_extent..y_extent} and likewise
    y2 around E_center + E_halfwidth.  Gap probabilities below 1e-10 are
    rejected (log accuracy collapses there).
    """
    spec = spec or QuadratureSpec()
    t_lo, t_hi = t_range
    n_t = int(round((t_hi - t_lo) / h_t)) + 1
    t_grid = t_lo + h_t * np.arange(n_t)
    offs = h_y * np.arange(-y_extent, y_extent + 1)
    y1 = E_center - E_halfwidth + offs
    y2 = E_center + E_halfwidth + offs
    Q = np.empty((n_t, len(y1), len(y2)))
    pairs = [(a, b) for a in y1 for b in y2]
    if any(b <= a for a, b in pairs):
        raise ValueError("stencil grids overlap: shrink h_y or widen the interval")
    rows = thread_map(lambda t: _log_gap_batch(float(t), pairs, m, spec),
                      t_grid, threads)
    for i, vals in enumerate(rows):
        Q[i] = np.reshape(vals, (len(y1), len(y2)))
    if Q.max() > 1e-12:
        raise ArithmeticError("log gap should be <= 0")
    if Q.min() < math.log(1e-10):
        raise ArithmeticError("gap probability below 1e-10 in the stencil")
    return QSurface(t_grid=t_grid, y1_grid=y1, y2_grid=y2, Q=Q, h_t=h_t, h_y=h_y)


def _dE2(Q, i, j, k, h):
    """(d/dy1 + d/dy2)^2 Q at lattice point (i, j, k)."""
    d11 = (Q[i, j + 1, k] - 2 * Q[i, j, k] + Q[i, j - 1, k]) / h**2
    d22 = (Q[i, j, k + 1] - 2 * Q[i, j, k] + Q[i, j, k - 1]) / h**2
    d12 = (Q[i, j + 1, k + 1] - Q[i, j + 1, k - 1]
           - Q[i, j - 1, k + 1] + Q[i, j - 1, k - 1]) / (4 * h**2)
    return d11 + 2 * d12 + d22


def _dE(Q, i, j, k, h):
    return ((Q[i, j + 1, k] - Q[i, j - 1, k])
            + (Q[i, j, k + 1] - Q[i, j, k - 1])) / (2 * h)


def pearcey_pde_residual(surface: QSurface) -> ResidualReport:
    """Residual of the third-order PDE at every interior stencil point.

    All derivatives are second-order centered; the pure t^3 derivative uses
    the five-point stencil, so two t-values at each end of the grid and the
    outer two y-offsets are consumed by the stencils.
    """
    Q = surface.Q
    h, ht = surface.h_y, surface.h_t
    n_t = len(surface.t_grid)
    jc = len(surface.y1_grid) // 2
    kc = len(surface.y2_grid) // 2
    y1c, y2c = surface.y1_grid[jc], surface.y2_grid[kc]
    if n_t < 5:
        raise ValueError("need at least 5 time points for the t^3 stencil")
    res, ts = [], []
    for i in range(2, n_t - 2):
        t = surface.t_grid[i]
        Qt3 = (Q[i + 2, jc, kc] - 2 * Q[i + 1, jc, kc]
               + 2 * Q[i - 1, jc, kc] - Q[i - 2, jc, kc]) / (2 * ht**3)
        G = {}
        for di in (-1, 0, 1):
            for dj in (-1, 0, 1):
                for dk in (-1, 0, 1):
                    if abs(dj) + abs(dk) <= 1:
                        G[(di, dj, dk)] = _dE2(Q, i + di, jc + dj, kc + dk, h)
        Gc = G[(0, 0, 0)]
        dE_G = ((G[(0, 1, 0)] - G[(0, -1, 0)]) + (G[(0, 0, 1)] - G[(0, 0, -1)])) / (2 * h)
        eps_G = (y1c * (G[(0, 1, 0)] - G[(0, -1, 0)])
                 + y2c * (G[(0, 0, 1)] - G[(0, 0, -1)])) / (2 * h)
        dt_G = (G[(1, 0, 0)] - G[(-1, 0, 0)]) / (2 * ht)
        W = (_dE(Q, i + 1, jc, kc, h) - _dE(Q, i - 1, jc, kc, h)) / (2 * ht)
        wron = dE_G * W - Gc * dt_G
        res.append(Qt3 + 0.125 * (eps_G - 2 * t * dt_G - 2 * Gc) - 0.5 * wron)
        ts.append(t)
    res = np.asarray(res)
    return ResidualReport(t_values=np.asarray(ts), residuals=res,
                          max_abs=float(np.abs(res).max()), h_t=ht, h_y=h,
                          y1=float(y1c), y2=float(y2c))


def small_interval_checks(t: float, x: float, h_list, m: int = 48,
                          spec: QuadratureSpec | None = None):
    """Leading small-interval coefficients of u over E = [x, x+h].

    Verifies dE u = h (pq)'(x) + O(h^2) and du/dt = (h/2)(p q'' - p''q)(x)
    + O(h^2): returns rows (h, dEu/h, du_dt/h) plus the two kernel-side
    targets; Richardson extrapolation is left to the caller/tests.  The time
    coefficient's sign follows the heat equations dp/dt = -p''/2,
    dq/dt = +q''/2 (to leading order du/dt = int_E (p_t q + p q_t)).
    """
    from .fredholm import resolvent_quantities
    spec = spec or QuadratureSpec()
    f = pearcey_pq(t, x, spec)
    p, dp, d2p = f.p.real, f.dp.real, f.d2p.real
    qv, dq, d2q = f.q.real, f.dq.real, f.d2q.real
    target_dE = dp * qv + p * dq          # (pq)'(x)
    target_dt = 0.5 * (p * d2q - d2p * qv)
    rows = []
    for h in h_list:
        E = IntervalUnion((x, x + h))
        eps = h * 0.05
        u_p = resolvent_quantities(t, E.shifted(eps), m, spec).u
        u_m = resolvent_quantities(t, E.shifted(-eps), m, spec).u
        dEu = (u_p - u_m) / (2 * eps)
        dt_h = 5e-4
        u_tp = resolvent_quantities(t + dt_h, E, m, spec).u
        u_tm = resolvent_quantities(t - dt_h, E, m, spec).u
        dut = (u_tp - u_tm) / (2 * dt_h)
        rows.append((h, dEu / h, dut / h))
    return rows, target_dE, target_dt


def wronskian_coefficient(t: float, x: float, m: int = 0,
                          spec: QuadratureSpec | None = None) -> float:
    """The non-vanishing coefficient 2pq(pq)'' - 3(p'q')'(p'q'' - p''q')
    at (t, x), expanded through the product rule on tabulated derivatives.
    (m is accepted for interface uniformity; the evaluation is pure
    quadrature of p, q.)"""
    spec = spec or QuadratureSpec()
    f = pearcey_pq(t, x, spec)
    p, dp, d2p = f.p.real, f.dp.real, f.d2p.real
    qv, dq, d2q = f.q.real, f.dq.real, f.d2q.real
    pq_dd = d2p * qv + 2 * dp * dq + p * d2q    # (pq)''
    pdqd_d = d2p * dq + dp * d2q                # (p'q')'
    return 2 * p * qv * pq_dd - 3 * pdqd_d * (dp * d2q - d2p * dq)


def residual_csv_lines(report: ResidualReport):
    lines = ["t,y1,y2,residual"]
    for t, r in zip(report.t_values, report.residuals):
        lines.append(f"{t:.17g},{report.y1:.17g},{report.y2:.17g},{r:.17g}")
    lines.append(f"# max_abs={report.max_abs:.17g} h_t={report.h_t:.17g} h_y={report.h_y:.17g}")
    return lines
