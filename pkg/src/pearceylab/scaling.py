"""Generic steepest-descent scaling analysis and the cusp universality harness.

Covers the quartic-saddle machinery around the cusp: the centered action F and
its derivatives, critical rescaling exponents for an order-l branch point, the
coefficient solver for the change of variables, descent checks on the kernel
contours, the Taylor-remainder bound, and the finite-n to Pearcey convergence
study.

Centered action
---------------
With q-only identities u0 - alpha = -1/r, u0 - beta = q/r, z0 - u0 = (q-1)/r,
the variation of the action around the quartic saddle depends on q alone:

    F(u0 + w) - F(u0) = w^2/2 - w(q-1)/r + p log(1 - r w) + (1-p) log(1 + r w / q),

which is what all descent checks sample.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ._quad import QuadratureSpec
from .kernels import (FiniteKernelParams, build_contours, finite_n_kernel_grid,
                      pearcey_kernel_grid)
from .spectral_curve import CriticalData, find_cusp

__all__ = [
    "ActionDerivatives", "ScalingExponents", "ScalingCoefficients",
    "ConvergenceRow", "ConvergenceStudy", "DescentReport", "DegenerateActionError",
    "action_F", "centered_action", "critical_exponents", "solve_scaling",
    "scaling_conditions_residuals", "two_target_action_derivatives",
    "rescale_map", "inverse_rescale_map", "conjugation_factor", "log_conjugation_factor",
    "convergence_study", "remainder_bound_check", "contour_descent_check",
    "convergence_csv_lines",
]


class DegenerateActionError(ValueError):
    """Scaling conditions are singular for the supplied action derivatives."""


# ---------------------------------------------------------------------------
# domain types


@dataclass(frozen=True)
class ActionDerivatives:
    """Partial derivatives of a one-parameter action S(x, y | t) at a critical
    point (x_c, y_c, t_c); y is the integration variable."""

    x_c: float
    y_c: float
    t_c: float
    S_y: float
    S_yy: float
    S_yyy: float
    S_yyyy: float
    S_xy: float
    S_ty: float
    S_xyy: float
    S_tyy: float
    S_x: float
    S_xx: float
    S_tx: float
    S_xxy: float
    S_txy: float
    S_tty: float

    def criticality_order(self, tol=1e-8):
        """Largest l with S_y = ... = d_y^{l+1} S = 0 at the base point."""
        derivs = [self.S_y, self.S_yy, self.S_yyy, self.S_yyyy]
        scale = max(1.0, *(abs(d) for d in derivs))
        l = 0
        while l + 1 < len(derivs) and abs(derivs[l + 1]) < tol * scale:
            if abs(derivs[l]) >= tol * scale:
                break
            l += 1
        return l


@dataclass(frozen=True)
class ScalingExponents:
    """Critical exponents for an order-l branch point, as exact fractions."""

    l: int
    gamma_y: Fraction
    gamma_x: Fraction
    gamma_t: Fraction


@dataclass(frozen=True)
class ScalingCoefficients:
    """Change-of-variable coefficients solving the scaling conditions."""

    alpha_t: float
    alpha_x: float
    beta_x: float
    alpha_y: float


@dataclass(frozen=True)
class ConvergenceRow:
    n: int
    max_abs_error: float


@dataclass(frozen=True)
class ConvergenceStudy:
    rows: tuple
    slope: float


@dataclass(frozen=True)
class DescentReport:
    passed: bool
    worst: float
    checked_points: int
    details: tuple


# ---------------------------------------------------------------------------
# the action around the cusp


def action_F(u, crit: CriticalData, order: int = 4):
    """F and derivatives at u (complex allowed) by closed-form differentiation.

    F(u) = u^2/2 - u z0 + p log(u - alpha) + (1-p) log(u - beta);
    returns [F, F', ..., F^(order)], order <= 5.
    """
    if order > 5:
        raise ValueError("order must be <= 5")
    p, al, be, z0 = crit.p, crit.alpha, crit.beta, crit.z0
    ua, ub = u - al, u - be
    if ua == 0 or ub == 0:
        raise ZeroDivisionError("action_F is singular at the target points")
    la = np.log(np.complex128(ua))
    lb = np.log(np.complex128(ub))
    out = [u * u / 2.0 - u * z0 + p * la + (1 - p) * lb]
    if order >= 1:
        out.append(u - z0 + p / ua + (1 - p) / ub)
    if order >= 2:
        out.append(1.0 - p / ua**2 - (1 - p) / ub**2)
    for k in range(3, order + 1):
        sgn = (-1.0) ** (k - 1)
        fact = math.factorial(k - 1)
        out.append(sgn * fact * (p / ua**k + (1 - p) / ub**k))
    return [complex(v) for v in out]


def centered_action(w, q):
    """F(u0 + w) - F(u0) as a function of q alone (complex w allowed)."""
    r = math.sqrt(q * q - q + 1.0)
    p = 1.0 / (1.0 + q**3)
    w = np.asarray(w, dtype=complex)
    return (w * w / 2.0 - w * (q - 1.0) / r
            + p * np.log(1.0 - r * w) + (1.0 - p) * np.log(1.0 + r * w / q))


# ---------------------------------------------------------------------------
# exponents and the coefficient solver


def critical_exponents(l: int) -> ScalingExponents:
    """gamma_y = 1/(l+2), gamma_x = (l+1)/(l+2), gamma_t = l/(l+2), exactly."""
    if l < 1:
        raise ValueError("l must be >= 1")
    return ScalingExponents(l=l,
                            gamma_y=Fraction(1, l + 2),
                            gamma_x=Fraction(l + 1, l + 2),
                            gamma_t=Fraction(l, l + 2))


_QUARTIC_NORM = {1: 1.0 / 3.0, 2: -0.25}


def solve_scaling(derivs: ActionDerivatives, l: int, tau: float) -> ScalingCoefficients:
    """Coefficients of the critical change of variables at an order-l point.

    For l = 2 these are the four conditions: alpha_x S_xy + alpha_t tau S_ty = 0,
    (alpha_y^4/24) S_yyyy = -1/4, (alpha_y^2/2)(alpha_t tau S_tyy +
    alpha_x S_xyy) = tau/2, and beta_x alpha_y S_xy = -1.  alpha_y takes the
    positive real root (|.| of the target ratio when the sign of the top
    derivative is non-standard, as in toy actions).  alpha_x is linear in tau.
    """
    if l not in _QUARTIC_NORM:
        raise ValueError("solve_scaling supports l = 1 (Airy) and l = 2 (Pearcey)")
    top = derivs.S_yyyy if l == 2 else derivs.S_yyy
    if top == 0:
        raise DegenerateActionError("vanishing top derivative")
    if derivs.S_xy == 0:
        raise DegenerateActionError("vanishing S_xy")
    fact = math.factorial(l + 2)
    target = _QUARTIC_NORM[l]
    ratio = fact * target / top
    alpha_y = abs(ratio) ** (1.0 / (l + 2))
    beta_x = -1.0 / (alpha_y * derivs.S_xy)
    D_t = derivs.S_tyy - derivs.S_ty * derivs.S_xyy / derivs.S_xy
    if abs(D_t) < 1e-14 * (abs(derivs.S_tyy) + abs(derivs.S_ty) + 1.0):
        if tau == 0.0:
            return ScalingCoefficients(alpha_t=math.nan, alpha_x=0.0,
                                       beta_x=beta_x, alpha_y=alpha_y)
        raise DegenerateActionError("time coupling is degenerate (S_tyy - S_ty S_xyy/S_xy = 0)")
    alpha_t = 1.0 / (alpha_y**2 * D_t)
    alpha_x = -alpha_t * tau * derivs.S_ty / derivs.S_xy
    return ScalingCoefficients(alpha_t=alpha_t, alpha_x=alpha_x,
                               beta_x=beta_x, alpha_y=alpha_y)


def scaling_conditions_residuals(coeffs: ScalingCoefficients,
                                 derivs: ActionDerivatives, tau: float):
    """Residuals of the four l=2 conditions under re-substitution."""
    c1 = coeffs.alpha_x * derivs.S_xy + coeffs.alpha_t * tau * derivs.S_ty
    c2 = coeffs.alpha_y**4 / 24.0 * derivs.S_yyyy + 0.25
    c3 = (coeffs.alpha_y**2 / 2.0) * (coeffs.alpha_t * tau * derivs.S_tyy
                                      + coeffs.alpha_x * derivs.S_xyy) - tau / 2.0
    c4 = coeffs.beta_x * coeffs.alpha_y * derivs.S_xy + 1.0
    return c1, c2, c3, c4


def two_target_action_derivatives(a: float, b: float, p: float) -> ActionDerivatives:
    """Closed-form partials of the two-target action at its quartic critical
    point (x0, u0, t0).

    S(x, u; t) = u^2/2 - x u/c(t) + p log(u - a phi(t)) + (1-p) log(u - b phi(t))
    with c(t) = sqrt(t(1-t)/2) and phi(t) = sqrt(2t/(1-t)).
    """
    crit = find_cusp(a, b, p)
    t0, x0, u0 = crit.t0, crit.x0, crit.u0
    c = crit.c0
    phi = t0 / c
    cp = (1.0 - 2.0 * t0) / (4.0 * c)
    cpp = (-2.0 * c - (1.0 - 2.0 * t0) * cp) / (4.0 * c * c)
    php = 1.0 / (phi * (1.0 - t0) ** 2)
    phpp = -php * php / phi + 2.0 * php / (1.0 - t0)
    ua = u0 - a * phi
    ub = u0 - b * phi
    pa, pb = p, 1.0 - p

    S_y = u0 - x0 / c + pa / ua + pb / ub
    S_yy = 1.0 - pa / ua**2 - pb / ub**2
    S_yyy = 2.0 * pa / ua**3 + 2.0 * pb / ub**3
    S_yyyy = -6.0 * pa / ua**4 - 6.0 * pb / ub**4
    S_xy = -1.0 / c
    S_ty = x0 * cp / c**2 + php * (pa * a / ua**2 + pb * b / ub**2)
    S_xyy = 0.0
    S_tyy = -2.0 * php * (pa * a / ua**3 + pb * b / ub**3)
    S_x = -u0 / c
    S_xx = 0.0
    S_tx = u0 * cp / c**2
    S_xxy = 0.0
    S_txy = cp / c**2
    S_tty = (x0 * (cpp / c**2 - 2.0 * cp**2 / c**3)
             + phpp * (pa * a / ua**2 + pb * b / ub**2)
             + 2.0 * php**2 * (pa * a**2 / ua**3 + pb * b**2 / ub**3))
    return ActionDerivatives(x_c=x0, y_c=u0, t_c=t0, S_y=S_y, S_yy=S_yy,
                             S_yyy=S_yyy, S_yyyy=S_yyyy, S_xy=S_xy, S_ty=S_ty,
                             S_xyy=S_xyy, S_tyy=S_tyy, S_x=S_x, S_xx=S_xx,
                             S_tx=S_tx, S_xxy=S_xxy, S_txy=S_txy, S_tty=S_tty)


# ---------------------------------------------------------------------------
# rescaling map and conjugation


def rescale_map(crit: CriticalData, n: int, tau: float, xi: float):
    """(t, x) of the cusp scaling window: t = t0 + (c0 mu)^2 2 tau/sqrt(n),
    x = c0 (z0 sqrt(n) + A tau + mu xi / n^(1/4))."""
    t = crit.t0 + (crit.c0 * crit.mu) ** 2 * 2.0 * tau / math.sqrt(n)
    x = crit.c0 * (crit.z0 * math.sqrt(n) + crit.bigA * tau + crit.mu * xi / n**0.25)
    if not 0.0 < t < 1.0:
        raise ValueError("rescaled time left (0,1); shrink tau or grow n")
    return t, x


def inverse_rescale_map(crit: CriticalData, n: int, t: float, x: float):
    """Inverse of rescale_map (exact; the map is affine for fixed n)."""
    tau = (t - crit.t0) * math.sqrt(n) / (2.0 * (crit.c0 * crit.mu) ** 2)
    xi = (x / crit.c0 - crit.z0 * math.sqrt(n) - crit.bigA * tau) * n**0.25 / crit.mu
    return tau, xi


def log_conjugation_factor(crit: CriticalData, n: int, tau: float, xi: float) -> float:
    """log D(xi, tau) = -u0 mu xi n^(1/4) - (1/2) sqrt(n) tau u0^2 mu^2
    - (1/2) t0 u0^2 mu^4 tau^2."""
    u0, mu, t0 = crit.u0, crit.mu, crit.t0
    return (-u0 * mu * xi * n**0.25
            - 0.5 * math.sqrt(n) * tau * u0**2 * mu**2
            - 0.5 * t0 * u0**2 * mu**4 * tau**2)


def conjugation_factor(crit: CriticalData, n: int, tau: float, xi: float) -> float:
    return math.exp(log_conjugation_factor(crit, n, tau, xi))


# ---------------------------------------------------------------------------
# remainder bound (quartic Taylor control)


def remainder_bound_check(q: float, delta: float, n: int):
    """Check n|F(u0 + delta/n^(1/4)) - F(u0) - F''''(u0) delta^4/(4! n)|
    <= 64 delta^5 (q + 1/q)^5 / (5 n^(1/4))."""
    r = math.sqrt(q * q - q + 1.0)
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    w = delta / n**0.25
    # delta <= n^(1/20) governs where the estimate is USED (the contour
    # neighborhood); the inequality itself only needs the bound below, which
    # keeps the fifth-derivative maximum finite
    if w > min(1.0, q) / (2.0 * r):
        raise ValueError("precondition delta/n^(1/4) <= min(1,q)/(2r) violated")
    F4 = -6.0 * r * r / q
    lhs = n * abs(complex(centered_action(w, q)) - F4 * w**4 / 24.0)
    rhs = 64.0 * delta**5 / (5.0 * n**0.25) * (q + 1.0 / q) ** 5
    return lhs, rhs, lhs <= rhs


# ---------------------------------------------------------------------------
# descent check


def _check_monotone(values, positions, label, seg_idx, details, tol=1e-11):
    worst = 0.0
    for k in range(len(values) - 1):
        rise = values[k + 1] - values[k]
        if rise > tol * (1.0 + abs(values[k])):
            worst = max(worst, rise)
            details.append((label, seg_idx, float(positions[k + 1]), float(rise)))
    return worst


def contour_descent_check(q: float, contour, samples: int = 200,
                          u_contour=None) -> DescentReport:
    """Verify Re F decreases away from the saddle along the u-line, and -Re F
    decreases away from it along every v-segment (including horizontal
    continuations), sampling `samples` points per segment."""
    if u_contour is None:
        u_contour, _ = build_contours(q, QuadratureSpec(), center=contour.center)
    center = contour.center
    details = []
    worst = 0.0
    npts = 0
    # u-line: Re F(u0 + i y) must fall away from y = 0 in both directions
    L = max(abs(u_contour.nodes[0] - center), abs(u_contour.nodes[-1] - center))
    for sgn in (1.0, -1.0):
        y = np.linspace(0.0, sgn * L.real if hasattr(L, "real") else sgn * L, samples)
        vals = centered_action(1j * y, q).real
        worst = max(worst, _check_monotone(vals, np.abs(y), "u-line", 0, details))
        npts += samples
    # v-branches: -Re F must fall with arclength distance from the center
    for branch in contour.branches():
        pts = np.array(branch)
        arc = np.concatenate([[0.0], np.cumsum(np.abs(np.diff(pts)))])
        i0 = int(np.argmin(np.abs(pts - center)))
        for seg_idx, (a, b) in enumerate(zip(pts[:-1], pts[1:])):
            s = np.linspace(0.0, 1.0, samples)
            zs = a + (b - a) * s
            dist = np.abs(arc[seg_idx] + s * abs(b - a) - arc[i0])
            vals = -centered_action(zs - center, q).real
            order = np.argsort(dist)
            worst = max(worst, _check_monotone(vals[order], dist[order],
                                               contour.label, seg_idx, details))
            npts += samples
    return DescentReport(passed=not details, worst=worst,
                         checked_points=npts, details=tuple(details[:16]))


# ---------------------------------------------------------------------------
# convergence study


def _default_probe():
    grid = (-1.0, -0.5, 0.0, 0.5, 1.0)
    return {"taus": (0.0,), "xis": grid, "etas": grid}


def convergence_study(a: float, b: float, p: float, n_list, probe=None,
                      spec: QuadratureSpec | None = None) -> ConvergenceStudy:
    """Max deviation of the conjugated, rescaled finite-n kernel from the
    Pearcey kernel over a probe grid, for each n; least-squares slope of
    log(error) against log(n) over the last three rows.

    Group sizes n1 = round(p n) are integers; each row uses the critical data
    of its effective fraction n1/n, which converges to p.  The Pearcey target
    is fraction-independent (universality), so rows remain comparable.
    """
    spec = spec or QuadratureSpec()
    probe = probe or _default_probe()
    taus = probe.get("taus", (0.0,))
    xis = np.asarray(probe.get("xis", (-1.0, -0.5, 0.0, 0.5, 1.0)), dtype=float)
    etas = np.asarray(probe.get("etas", (-1.0, -0.5, 0.0, 0.5, 1.0)), dtype=float)
    n_list = [int(n) for n in n_list]
    if any(n2 <= n1 for n1, n2 in zip(n_list, n_list[1:])) or min(n_list) < 16:
        raise ValueError("n_list must be ascending with every n >= 16")
    rows = []
    for n in n_list:
        p_eff = int(round(p * n)) / n
        crit = find_cusp(a, b, p_eff)
        err = 0.0
        for tau in taus:
            t, _ = rescale_map(crit, n, tau, 0.0)
            xs = np.array([rescale_map(crit, n, tau, xi)[1] for xi in xis])
            ys = np.array([rescale_map(crit, n, tau, eta)[1] for eta in etas])
            params = FiniteKernelParams(n=n, a=a, b=b, p=p_eff, t_k=t, t_l=t)
            vals, ls = finite_n_kernel_grid(params, xs, ys, spec)
            logD = np.array([log_conjugation_factor(crit, n, tau, xi) for xi in xis])
            logDe = np.array([log_conjugation_factor(crit, n, tau, eta) for eta in etas])
            resc = (crit.c0 * crit.mu * n**-0.25
                    * vals * np.exp(ls + logD[:, None] - logDe[None, :]))
            KP = pearcey_kernel_grid(tau, tau, xis, etas, spec)
            err = max(err, float(np.abs(resc - KP).max()))
        rows.append(ConvergenceRow(n=n, max_abs_error=err))
    tail = rows[-3:] if len(rows) >= 3 else rows
    lx = np.log([r.n for r in tail])
    ly = np.log([max(r.max_abs_error, 1e-300) for r in tail])
    slope = float(np.polyfit(lx, ly, 1)[0]) if len(tail) >= 2 else math.nan
    return ConvergenceStudy(rows=tuple(rows), slope=slope)


def convergence_csv_lines(study: ConvergenceStudy):
    lines = ["n,max_abs_error"]
    for row in study.rows:
        lines.append(f"{row.n},{row.max_abs_error:.17g}")
    lines.append(f"# fitted_slope={study.slope:.17g}")
    return lines
