"""Pearcey, Airy, and finite-n Brownian-bridge kernels on descent contours.

Contour conventions
-------------------
The quartic ("X") contour consists of two open branches: one entering from
e^{i pi/4} infinity and leaving to e^{-i pi/4} infinity, the other entering
from e^{i 5pi/4} infinity and leaving to e^{i 3pi/4} infinity.  The companion
vertical line is traversed upward.  Both pass through the same centre; since
the integrand couples them through 1/(U - V), each X branch is indented by a
short vertical chord (right branch passing right of the line, left branch
left of it).  The kernel value is independent of the indentation width
(the integrand is analytic there), which we verify in tests.

With these orientations the equal-time Pearcey kernel satisfies

    K(x, y) = (p(x)q''(y) - p'(x)q'(y) + p''(x)q(y) - t p(x)q(y)) / (y - x),

with p the X-contour integral and q the vertical-line integral; the kernel
has a positive diagonal and obeys dK/dt = (-p'(x)q(y) + p(x)q'(y))/2.

Finite-n kernels use the substitution U = c0*u*sqrt(n)/t0 onto contours
through the quartic saddle u0 near the cusp, and saddle-adapted contours
(vertical line through Re g(z) plus rectangular pole loops) elsewhere.
Because the finite-n V-contour is closed, the position of the U-line is
immaterial up to an explicitly added residue term when the line pierces a
loop; everything is evaluated with a common log-magnitude factored out.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ._quad import QuadratureError, QuadratureSpec, panel_rule, segment_rule
from .spectral_curve import CriticalData, find_cusp, solve_stieltjes, TargetConfig

__all__ = [
    "ContourPath", "PearceyPQ", "FiniteKernelParams",
    "build_contours", "pearcey_contours", "pearcey_pq",
    "pearcey_kernel", "pearcey_kernel_grid", "pearcey_kernel_pq_form",
    "airy_ai", "airy_ai_prime", "airy_kernel",
    "finite_n_kernel", "finite_n_kernel_scaled", "finite_n_kernel_grid",
    "finite_n_diagonal", "kernel_grid_csv_lines",
]


# ---------------------------------------------------------------------------
# contour paths


@dataclass(frozen=True)
class ContourPath:
    """Piecewise-linear directed contour; branch_breaks mark where a new
    disconnected branch begins in `nodes`."""

    nodes: tuple
    rays: tuple | None
    label: str
    center: complex = 0.0
    branch_breaks: tuple = ()

    def __post_init__(self):
        for a, b in self.segments():
            if a == b:
                raise ValueError("consecutive contour nodes must be distinct")
        if self.rays is not None:
            for d in self.rays:
                if abs(abs(d) - 1.0) > 1e-12:
                    raise ValueError("ray directions must be unit complex numbers")
        if self.label == "X-contour":
            for d in self.rays or ():
                if abs(abs(d.real) - abs(d.imag)) > 1e-12:
                    raise ValueError("X-contour rays must make angles of pi/4")

    def branches(self):
        marks = (0,) + tuple(self.branch_breaks) + (len(self.nodes),)
        for lo, hi in zip(marks[:-1], marks[1:]):
            yield self.nodes[lo:hi]

    def segments(self):
        for br in self.branches():
            for a, b in zip(br[:-1], br[1:]):
                yield a, b


def _x_shape_nodes(center, L, d, s_corner, q):
    """Branch node lists for the (possibly truncated) X through `center`,
    indented by a vertical chord at distance d."""
    diag = min(s_corner, L)           # diagonal half-extent measured in Re
    c_hi = center + d * (1 + 1j)
    c_lo = center + d * (1 - 1j)
    H = L                              # horizontal continuation length
    right = [center + diag * (1 + 1j), c_hi, c_lo, center + diag * (1 - 1j)]
    left = [center - diag * (1 + 1j), center - d * (1 + 1j),
            center - d * (1 - 1j), center - diag * (1 - 1j)]
    if q > 1.0 and s_corner < L:
        right = [right[0] + H] + right + [right[-1] + H]
    if q < 1.0 and s_corner < L:
        left = [left[0] - H] + left + [left[-1] - H]
    return right, left


def build_contours(q: float, spec: QuadratureSpec, center: complex = 0.0,
                   pinch_gap: float = 0.0):
    """Steepest-descent contours for the quartic saddle at `center`.

    Returns (u_contour, v_contour): the vertical line through the centre and
    the X-shaped loop pair with corner parameter s = q/(r|q-1|) and horizontal
    continuations (outward right for q > 1, outward left for q < 1).  A
    positive pinch_gap indents each V branch away from the line by a vertical
    chord at distance pinch_gap.
    """
    if q <= 0:
        raise ValueError("q must be positive")
    L = spec.truncation_radius
    r = math.sqrt(q * q - q + 1.0)
    s_corner = math.inf if q == 1.0 else q / (r * abs(q - 1.0))
    d = min(pinch_gap, min(s_corner, L) / 2.0)
    u = ContourPath(nodes=(center - 1j * L, center + 1j * L), rays=None,
                    label="imaginary-axis", center=center)
    if d <= 0:
        diag = min(s_corner, L)
        right = [center + diag * (1 + 1j), center, center + diag * (1 - 1j)]
        left = [center - diag * (1 + 1j), center, center - diag * (1 - 1j)]
        if q > 1.0 and s_corner < L:
            right = [right[0] + L] + right + [right[-1] + L]
        if q < 1.0 and s_corner < L:
            left = [left[0] - L] + left + [left[-1] - L]
    else:
        right, left = _x_shape_nodes(center, L, d, s_corner, q)
    nodes = tuple(right) + tuple(left)
    label = "v-loop-q=1" if q == 1.0 else ("v-loop-q>1" if q > 1 else "v-loop-q<1")
    ein = (1 + 1j) / math.sqrt(2)
    rays = (ein, np.conj(ein), -ein, -np.conj(ein))
    v = ContourPath(nodes=nodes, rays=rays, label=label, center=center,
                    branch_breaks=(len(right),))
    return u, v


def pearcey_contours(spec: QuadratureSpec, pinch_gap: float = 1.0):
    """U on the upward vertical line through 0, V on the indented X through 0."""
    u, v = build_contours(1.0, spec, center=0.0, pinch_gap=min(pinch_gap, spec.truncation_radius / 4))
    v = ContourPath(nodes=v.nodes, rays=v.rays, label="X-contour",
                    center=0.0, branch_breaks=v.branch_breaks)
    return u, v


def _contour_rule(path: ContourPath, spec: QuadratureSpec, inner_scale=None):
    """Quadrature nodes/weights for a ContourPath; segments whose near end is
    close to the centre get geometric grading toward that end."""
    L = spec.truncation_radius
    inner = inner_scale if inner_scale is not None else L * 2.0 ** (1 - spec.panels)
    zs, ws = [], []
    for a, b in path.segments():
        da, db = abs(a - path.center), abs(b - path.center)
        seg_len = abs(b - a)
        if min(da, db) < 0.35 * L and max(da, db) > 3.0 * min(da, db) + 1e-12:
            toward = "start" if da < db else "end"
            z, w = segment_rule(a, b, spec.panels, spec.nodes_per_panel,
                                grade_toward=toward,
                                inner_frac=min(0.5, inner / seg_len))
        else:
            z, w = segment_rule(a, b, max(2, spec.panels // 2), spec.nodes_per_panel)
        zs.append(z)
        ws.append(w)
    return np.concatenate(zs), np.concatenate(ws)


def _uline_rule(center, L, spec, inner_scale=None):
    inner = inner_scale if inner_scale is not None else L * 2.0 ** (1 - spec.panels)
    z1, w1 = segment_rule(center - 1j * L, center, spec.panels,
                          spec.nodes_per_panel, grade_toward="end",
                          inner_frac=min(0.5, inner / L))
    z2, w2 = segment_rule(center, center + 1j * L, spec.panels,
                          spec.nodes_per_panel, grade_toward="start",
                          inner_frac=min(0.5, inner / L))
    return np.concatenate([z1, z2]), np.concatenate([w1, w2])


# ---------------------------------------------------------------------------
# Pearcey p/q functions


@dataclass(frozen=True)
class PearceyPQ:
    """p, q and first three derivatives at (t, x); values carry tiny imaginary
    parts from quadrature which are checked against 1e-10 * scale."""

    t: float
    x: float
    p: complex
    dp: complex
    d2p: complex
    d3p: complex
    q: complex
    dq: complex
    d2q: complex
    d3q: complex

    def p_values(self):
        return np.array([self.p, self.dp, self.d2p, self.d3p])

    def q_values(self):
        return np.array([self.q, self.dq, self.d2q, self.d3q])

    def ode_residuals(self):
        rp = self.d3p - self.t * self.dp + self.x * self.p
        rq = self.d3q - self.t * self.dq - self.x * self.q
        return abs(rp), abs(rq)


def _pq_L(t, x, spec):
    return max(spec.truncation_radius,
               (4.0 * abs(x)) ** (1.0 / 3.0) + 2.0,
               math.sqrt(2.0 * max(-t, 0.0)) + 3.0,
               math.sqrt(2.0 * max(t, 0.0)) + 3.0)


def _pq_panels(t, x, L, spec):
    osc = L * (abs(x) / math.sqrt(2.0) + abs(t) * L / 2.0)
    need = int(osc / (2.0 * math.pi) * 8) + 1
    return max(spec.panels, -(-need // spec.nodes_per_panel))


def _pq_families(t, x, spec, orders=4):
    """Raw quadrature of p^{(k)}, q^{(k)}, k < orders, at (t, x)."""
    L = _pq_L(t, x, spec)
    panels = _pq_panels(t, x, L, spec)
    v, wv = panel_rule(-L, L, 2 * panels, spec.nodes_per_panel)
    base_q = np.exp(-v**4 / 4.0 - t * v**2 / 2.0 - 1j * v * x)
    qs = np.array([-((-1j) ** k) / (2.0 * math.pi) * np.sum(wv * v**k * base_q)
                   for k in range(orders)])
    e = np.exp(1j * math.pi / 4.0)
    s_neg, w_neg = panel_rule(-L, 0.0, panels, spec.nodes_per_panel)
    s_pos, w_pos = panel_rule(0.0, L, panels, spec.nodes_per_panel)
    g_neg = np.exp(-s_neg**4 / 4.0 - 1j * t * s_neg**2 / 2.0 + x * s_neg * e)
    g_pos = np.exp(-s_pos**4 / 4.0 - 1j * t * s_pos**2 / 2.0 + x * s_pos * e)
    ps = []
    for k in range(orders):
        Dk = (e ** k) * (np.sum(w_neg * s_neg**k * g_neg) - np.sum(w_pos * s_pos**k * g_pos))
        ps.append(complex(np.imag(e * Dk) / math.pi))
    return np.array(ps), qs


def pearcey_pq(t: float, x: float, spec: QuadratureSpec | None = None) -> PearceyPQ:
    """p, q and derivatives to third order by contour quadrature.

    Derivatives come from inserting powers of the integration variable; the
    two defining third-order ODEs are checked as an internal residual, and a
    panel-doubling comparison guards quadrature convergence.
    """
    spec = spec or QuadratureSpec()
    if abs(t) > 50.0 or abs(x) > 50.0:
        raise ValueError("pearcey_pq envelope is |t|, |x| <= 50")
    ps, qs = _pq_families(t, x, spec)
    ps2, qs2 = _pq_families(t, x, spec.refined())
    err = max(np.abs(ps - ps2).max(), np.abs(qs - qs2).max())
    scale = max(1.0, np.abs(ps2).max(), np.abs(qs2).max())
    if err > 1e-8 * scale:
        raise QuadratureError(
            f"pearcey_pq did not converge at (t={t}, x={x})", achieved=err)
    out = PearceyPQ(t=t, x=x, p=ps2[0], dp=ps2[1], d2p=ps2[2], d3p=ps2[3],
                    q=qs2[0], dq=qs2[1], d2q=qs2[2], d3q=qs2[3])
    rp, rq = out.ode_residuals()
    if max(rp, rq) > 1e-8 * scale:
        raise QuadratureError(
            f"Pearcey ODE residual {max(rp, rq):.2e} at (t={t}, x={x})",
            achieved=max(rp, rq))
    if max(abs(v.imag) for v in (out.p, out.dp, out.d2p, out.d3p,
                                 out.q, out.dq, out.d2q, out.d3q)) > 1e-10 * scale:
        raise QuadratureError(f"pearcey_pq imaginary part exceeds tolerance at (t={t}, x={x})")
    return out


def pq_tables(t, xs, spec=None, orders=4):
    """Vectorized p^{(k)}(x), q^{(k)}(x) tables over an array of x values.

    Returns (P, Q) with shape (orders, len(xs)); used for Nystrom assembly.
    """
    spec = spec or QuadratureSpec()
    xs = np.asarray(xs, dtype=float)
    xmax = float(np.abs(xs).max(initial=0.0))
    L = _pq_L(t, xmax, spec)
    panels = _pq_panels(t, xmax, L, spec)
    v, wv = panel_rule(-L, L, 2 * panels, spec.nodes_per_panel)
    base = np.exp(-v**4 / 4.0 - t * v**2 / 2.0)
    phase = np.exp(-1j * np.outer(v, xs))
    Q = np.empty((orders, len(xs)), dtype=float)
    for k in range(orders):
        vals = -((-1j) ** k) / (2.0 * math.pi) * ((wv * v**k * base) @ phase)
        Q[k] = vals.real
    e = np.exp(1j * math.pi / 4.0)
    s_neg, w_neg = panel_rule(-L, 0.0, panels, spec.nodes_per_panel)
    s_pos, w_pos = panel_rule(0.0, L, panels, spec.nodes_per_panel)
    s_all = np.concatenate([s_neg, s_pos])
    w_all = np.concatenate([w_neg, -w_pos])
    gbase = np.exp(-s_all**4 / 4.0 - 1j * t * s_all**2 / 2.0)
    gph = np.exp(np.outer(s_all * e, xs))
    P = np.empty((orders, len(xs)), dtype=float)
    for k in range(orders):
        Dk = (e ** k) * ((w_all * s_all**k * gbase) @ gph)
        P[k] = np.imag(e * Dk) / math.pi
    return P, Q


# ---------------------------------------------------------------------------
# Pearcey kernel, both representations


def _pearcey_uv_rules(s, t, x_abs, y_abs, spec):
    L = max(_pq_L(t, y_abs, spec), _pq_L(s, x_abs, spec))
    wide = QuadratureSpec(L, spec.panels, spec.nodes_per_panel)
    d = min(1.0, L / 6.0)
    _, v_path = pearcey_contours(wide, pinch_gap=d)
    U, WU = _uline_rule(0.0, L, wide)
    V, WV = _contour_rule(v_path, wide)
    return U, WU, V, WV


def pearcey_kernel_grid(s: float, t: float, xs, ys, spec: QuadratureSpec | None = None):
    """Extended Pearcey kernel K_{s,t}(x, y) on a grid, double-contour form.

    The 1/(U-V) coupling is evaluated once and contracted against the x- and
    y-dependent exponentials, so a full grid costs little more than a point.
    Includes the Gaussian correction term when s < t.
    """
    spec = spec or QuadratureSpec()
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    ys = np.atleast_1d(np.asarray(ys, dtype=float))
    xm = float(np.abs(xs).max()) if xs.size else 0.0
    ym = float(np.abs(ys).max()) if ys.size else 0.0
    U, WU, V, WV = _pearcey_uv_rules(s, t, xm, ym, spec)
    EU = np.exp(-U**4 / 4.0 + t * U**2 / 2.0)[:, None] * np.exp(-np.outer(U, ys))
    EV = np.exp(V**4 / 4.0 - s * V**2 / 2.0)[:, None] * np.exp(np.outer(V, xs))
    M = (WV[:, None] * WU[None, :]) / (U[None, :] - V[:, None])
    out = -(EV.T @ M @ EU) / (4.0 * math.pi**2)
    if np.abs(out.imag).max(initial=0.0) > 1e-9 * (1.0 + np.abs(out.real).max(initial=0.0)):
        raise QuadratureError("pearcey kernel grid has non-negligible imaginary part")
    out = out.real
    if s < t:
        dx = xs[:, None] - ys[None, :]
        out = out - np.exp(-dx * dx / (2.0 * (t - s))) / math.sqrt(2.0 * math.pi * (t - s))
    return out


def pearcey_kernel(s: float, t: float, x: float, y: float,
                   spec: QuadratureSpec | None = None) -> float:
    """Extended Pearcey kernel at a point (double contour integral plus the
    Gaussian correction for s < t)."""
    return float(pearcey_kernel_grid(s, t, [x], [y], spec)[0, 0])


def pearcey_kernel_pq_form(t: float, x: float, y: float,
                           spec: QuadratureSpec | None = None) -> float:
    """Equal-time Pearcey kernel through the p/q functions.

    K(x,y) = (p(x)q''(y) - p'(x)q'(y) + p''(x)q(y) - t p(x)q(y)) / (y - x);
    on the diagonal the limit p q''' - p' q'' + p'' q' - t p q' is used.
    """
    spec = spec or QuadratureSpec()
    fx = pearcey_pq(t, x, spec)
    fy = fx if y == x else pearcey_pq(t, y, spec)
    p, dp, d2p = fx.p.real, fx.dp.real, fx.d2p.real
    if x == y:
        qv, dq, d2q, d3q = fy.q.real, fy.dq.real, fy.d2q.real, fy.d3q.real
        return p * d3q - dp * d2q + d2p * dq - t * p * dq
    qv, dq, d2q = fy.q.real, fy.dq.real, fy.d2q.real
    num = p * d2q - dp * dq + d2p * qv - t * p * qv
    return num / (y - x)


def pearcey_kernel_matrix(t, xs, ys, spec=None):
    """Equal-time kernel matrix via tabulated p/q families (fast Nystrom fill).

    Entries with x == y use the analytic diagonal limit.
    """
    spec = spec or QuadratureSpec()
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    P, _ = pq_tables(t, xs, spec)
    _, Q = pq_tables(t, ys, spec)
    num = (np.outer(P[0], Q[2]) - np.outer(P[1], Q[1]) + np.outer(P[2], Q[0])
           - t * np.outer(P[0], Q[0]))
    den = ys[None, :] - xs[:, None]
    same = np.abs(den) < 1e-13 * (1.0 + np.abs(xs)[:, None])
    out = np.where(same, 0.0, num / np.where(same, 1.0, den))
    if same.any():
        _, Q3 = pq_tables(t, ys, spec, orders=4)
        ii, jj = np.nonzero(same)
        diag = (P[0][ii] * Q3[3][jj] - P[1][ii] * Q3[2][jj]
                + P[2][ii] * Q3[1][jj] - t * P[0][ii] * Q3[1][jj])
        out[ii, jj] = diag
    return out


# ---------------------------------------------------------------------------
# Airy function and kernel


def _airy_family(z, prime):
    z = np.atleast_1d(np.asarray(z, dtype=float))
    out = np.empty_like(z)
    for i, zz in enumerate(z):
        shift = math.sqrt(zz) if zz > 0 else 0.0
        L = math.sqrt(3.0 * max(-zz, 0.0)) + 8.0
        s, w = panel_rule(0.0, L, 12, 32)
        e = np.exp(1j * math.pi / 3.0)
        wnod = shift + s * e
        expo = wnod**3 / 3.0 - zz * wnod
        base = np.exp(expo)
        if prime:
            val = e * np.sum(w * (-wnod) * base)
        else:
            val = e * np.sum(w * base)
        out[i] = np.imag(val) / math.pi
    return out if out.size > 1 else float(out[0])


def airy_ai(x):
    """Airy Ai by quadrature over the rays arg w = +-pi/3 (shifted through the
    saddle sqrt(x) for x > 0)."""
    return _airy_family(x, prime=False)


def airy_ai_prime(x):
    """Derivative of Airy Ai by the same contour quadrature."""
    return _airy_family(x, prime=True)


def airy_kernel(x: float, y: float) -> float:
    """Airy kernel (Ai(x)Ai'(y) - Ai'(x)Ai(y))/(x - y), diagonal by limit."""
    if x == y:
        ai, aip = airy_ai(x), airy_ai_prime(x)
        return aip * aip - x * ai * ai
    ax, apx = airy_ai(x), airy_ai_prime(x)
    ay, apy = airy_ai(y), airy_ai_prime(y)
    return (ax * apy - apx * ay) / (x - y)


def airy_kernel_matrix(xs, ys):
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    ax, apx = airy_ai(xs), airy_ai_prime(xs)
    ay, apy = airy_ai(ys), airy_ai_prime(ys)
    ax, apx = np.atleast_1d(ax), np.atleast_1d(apx)
    ay, apy = np.atleast_1d(ay), np.atleast_1d(apy)
    den = xs[:, None] - ys[None, :]
    num = np.outer(ax, apy) - np.outer(apx, ay)
    same = np.abs(den) < 1e-13 * (1.0 + np.abs(xs)[:, None])
    out = np.where(same, 0.0, num / np.where(same, 1.0, den))
    if same.any():
        ii, jj = np.nonzero(same)
        out[ii, jj] = apx[ii] * apx[ii] - xs[ii] * ax[ii] * ax[ii]
    return out


# ---------------------------------------------------------------------------
# finite-n kernel


@dataclass(frozen=True)
class FiniteKernelParams:
    """Finite-n bridge kernel instance; fractions are rounded to integer group
    sizes n1 + n2 = n and the critical data uses the effective p = n1/n."""

    n: int
    a: float
    b: float
    p: float
    t_k: float
    t_l: float

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("n must be >= 2")
        if not self.a > self.b:
            raise ValueError("requires a > b")
        for t in (self.t_k, self.t_l):
            if not 0.0 < t < 1.0:
                raise ValueError("times must lie in (0,1)")
        if not 0.0 < self.p < 1.0:
            raise ValueError("p must lie in (0,1)")

    @property
    def n1(self):
        return int(round(self.p * self.n))

    @property
    def n2(self):
        return self.n - self.n1

    @property
    def p_eff(self):
        return self.n1 / self.n

    def critical(self) -> CriticalData:
        return find_cusp(self.a, self.b, self.p_eff)


def _descent_checked(q, spec):
    from .scaling import contour_descent_check
    report = _descent_checked_cached(round(q, 12), spec.truncation_radius)
    if not report.passed:
        raise ArithmeticError(f"steepest-descent check failed for q={q}: {report.worst}")


@lru_cache(maxsize=64)
def _descent_checked_cached(q, L):
    from .scaling import contour_descent_check
    u, v = build_contours(q, QuadratureSpec(truncation_radius=L), center=0.0)
    return contour_descent_check(q, v, samples=64, u_contour=u)


def _cusp_rules(crit: CriticalData, n, spec, dz_max=0.0):
    """Contour rules through the quartic saddle.  For probe points with
    z != z0 the action acquires a linear tilt n (z - z0) Re(v - u0) that beats
    the |v|^{-n} tail decay at large radius, so the truncation radius is
    capped near 1/dz, which maximizes the edge decay rate."""
    q, u0, mu = crit.q, crit.u0, crit.mu
    L = spec.truncation_radius
    if dz_max > 0:
        L = min(L, max(2.2, 1.0 / dz_max))
    work = QuadratureSpec(max(L, 4.0), spec.panels, spec.nodes_per_panel)
    L = work.truncation_radius
    d = min(0.5, 0.8 / (mu * max(n, 2) ** 0.25))
    r = math.sqrt(q * q - q + 1.0)
    s_corner = math.inf if q == 1.0 else q / (r * abs(q - 1.0))
    d = min(d, min(s_corner, L) / 3.0)
    inner = min(d / 6.0, 0.02)
    _, v_path = build_contours(q, work, center=u0, pinch_gap=d)
    U, WU = _uline_rule(u0, L, work, inner_scale=inner)
    V, WV = _contour_rule(v_path, work, inner_scale=inner)
    return U, WU, V, WV


def _psi_cusp(u, kap, t, coord, n1, n2, alpha, beta):
    U = kap * u
    return (t * U * U - 2.0 * coord * U) / (1.0 - t) \
        + n1 * np.log(u - alpha) + n2 * np.log(u - beta)


def _finite_cusp_grid(params, xs, ys, spec):
    """Cusp-tier finite-n kernel on a grid; returns (values, log_scale)."""
    crit = params.critical()
    _descent_checked(crit.q, spec)
    n, n1, n2 = params.n, params.n1, params.n2
    sqn = math.sqrt(n)
    alpha, beta = crit.alpha, crit.beta
    kap = crit.c0 * sqn / crit.t0
    dz_max = 0.0
    for t, coords in ((params.t_k, xs), (params.t_l, ys)):
        c = math.sqrt(t * (1.0 - t) / 2.0)
        for coord in np.atleast_1d(coords):
            dz_max = max(dz_max, abs(coord / (sqn * c) - crit.z0))
    U, WU, V, WV = _cusp_rules(crit, n, spec, dz_max)
    # geometric enclosure check: poles must lie strictly inside the V wedges
    r = math.sqrt(crit.q ** 2 - crit.q + 1.0)
    s_corner = math.inf if crit.q == 1.0 else crit.q / (r * abs(crit.q - 1.0))
    reach = min(s_corner, spec.truncation_radius)
    if not (0 < alpha - crit.u0 < reach + spec.truncation_radius
            and 0 < crit.u0 - beta < reach + spec.truncation_radius):
        raise ArithmeticError("v-loop does not enclose the rescaled targets")
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    ys = np.atleast_1d(np.asarray(ys, dtype=float))
    PsiU0 = _psi_cusp(U, kap, params.t_l, 0.0, n1, n2, alpha, beta)
    PsiV0 = _psi_cusp(V, kap, params.t_k, 0.0, n1, n2, alpha, beta)
    yc, xc = float(ys.mean()), float(xs.mean())
    CU = (PsiU0.real - 2.0 * yc * (kap * U).real / (1.0 - params.t_l)).max()
    CV = (-PsiV0.real + 2.0 * xc * (kap * V).real / (1.0 - params.t_k)).max()
    EU = np.exp(PsiU0[:, None] - np.outer(2.0 * kap * U / (1.0 - params.t_l), ys) - CU)
    EV = np.exp(-PsiV0[:, None] + np.outer(2.0 * kap * V / (1.0 - params.t_k), xs) - CV)
    M = (WV[:, None] * WU[None, :]) / (U[None, :] - V[:, None]) * kap
    pref = -1.0 / (2.0 * math.pi**2 * math.sqrt((1.0 - params.t_k) * (1.0 - params.t_l)))
    vals = pref * (EV.T @ M @ EU)
    if params.t_k < params.t_l:
        dt = params.t_l - params.t_k
        logext = (-0.5 * math.log(math.pi * dt)
                  - (xs[:, None] - ys[None, :]) ** 2 / dt
                  + xs[:, None] ** 2 / (1.0 - params.t_k)
                  - ys[None, :] ** 2 / (1.0 - params.t_l))
        vals = vals - np.exp(logext - (CU + CV))
    return vals, CU + CV


def _rect_lobe_nodes(x0, x1, h, spec, cross_at=None, inner=None):
    """CCW rectangle [x0,x1] x [-h,h]; top/bottom edges graded toward a
    crossing abscissa when the U-line pierces the lobe."""
    panels, npp = spec.panels, spec.nodes_per_panel
    segs = []
    segs.append((x1 - 1j * h, x1 + 1j * h, None))
    if cross_at is not None and x0 < cross_at < x1:
        segs.append((x1 + 1j * h, cross_at + 1j * h, "end"))
        segs.append((cross_at + 1j * h, x0 + 1j * h, "start"))
        segs.append((x0 + 1j * h, x0 - 1j * h, None))
        segs.append((x0 - 1j * h, cross_at - 1j * h, "end"))
        segs.append((cross_at - 1j * h, x1 - 1j * h, "start"))
    else:
        segs.append((x1 + 1j * h, x0 + 1j * h, None))
        segs.append((x0 + 1j * h, x0 - 1j * h, None))
        segs.append((x0 - 1j * h, x1 - 1j * h, None))
    Z, W = [], []
    for a_, b_, grade in segs:
        frac = None if inner is None else min(0.4, inner / abs(b_ - a_))
        z, w = segment_rule(a_, b_, panels, npp, grade_toward=grade, inner_frac=frac)
        Z.append(z)
        W.append(w)
    return np.concatenate(Z), np.concatenate(W)


def _adaptive_side(params, t, coord):
    c = math.sqrt(t * (1.0 - t) / 2.0)
    kap = c * math.sqrt(params.n) / t
    alpha = params.a * t / c
    beta = params.b * t / c
    z = coord / (math.sqrt(params.n) * c)
    cfg = TargetConfig(targets=(params.b, params.a),
                       fractions=(1.0 - params.p_eff, params.p_eff), time=t)
    g = solve_stieltjes(cfg, z).g
    return c, kap, alpha, beta, z, g


def _crossing_uline(sig, L, h, d, spec, inner, ysad=0.0):
    """Vertical line through sig with a geometric cascade toward the real
    axis (covering every scale from `inner` up) plus a fine band over the
    saddle heights +-ysad and the crossing heights +-h."""
    b_lo = max(1e-3, min(h, ysad if ysad > 1e-6 else h) - 4 * d)
    b_hi = min(max(h, ysad) + 4 * d, L - 1e-9)
    casc = int(math.ceil(math.log2(max(b_lo / inner, 2.0)))) + 2
    Z, W = [], []
    hx = min(max(h, b_lo + 1e-3), b_hi - 1e-3)  # crossing height inside the band
    cross_inner = 1e-4
    for (a_, b_, panels, grade, fr) in (
            (-L, -b_hi, max(3, spec.panels // 2), None, None),
            (-b_hi, -hx, spec.panels, "end", cross_inner),
            (-hx, -b_lo, spec.panels, "start", cross_inner),
            (-b_lo, 0.0, casc, "end", inner),
            (0.0, b_lo, casc, "start", inner),
            (b_lo, hx, spec.panels, "end", cross_inner),
            (hx, b_hi, spec.panels, "start", cross_inner),
            (b_hi, L, max(3, spec.panels // 2), None, None)):
        frac = None if fr is None else min(0.4, fr / abs(b_ - a_))
        z, w = segment_rule(sig + 1j * a_, sig + 1j * b_, panels,
                            spec.nodes_per_panel, grade_toward=grade,
                            inner_frac=frac)
        Z.append(z)
        W.append(w)
    return np.concatenate(Z), np.concatenate(W)


def _finite_adaptive(params, x, y, spec):
    """Saddle-adapted finite-n kernel at one point; returns (value, log_scale).

    The U-line runs vertically through the real part of the physical saddle
    of its own action; the V-contour consists of saddle-height rectangles
    around the poles.  When the line pierces a rectangle, the exact residue
    sweep (a 1-D integral of an entire function over the lobe boundary right
    of the line) compensates, so the configuration equals the line-beside-loop
    one.  Everything is evaluated relative to a common log magnitude.
    """
    n, n1, n2 = params.n, params.n1, params.n2
    cU, kapU, alU, beU, zU, gU = _adaptive_side(params, params.t_l, y)
    cV, kapV, alV, beV, zV, gV = _adaptive_side(params, params.t_k, x)
    sig = gU.real
    sig_v = sig * kapU / kapV   # U-line abscissa mapped to the V variable
    ysad = abs(gV.imag)
    L = spec.truncation_radius
    h = ysad + 0.9 / math.sqrt(n)
    d = min(0.22, max(0.04, 1.1 / math.sqrt(n)))
    inner = min(2e-3, d / 8)
    split_clear = max(2.0 * d, 0.55)

    def psiU(u):
        return _psi_cusp(u, kapU, params.t_l, y, n1, n2, alU, beU)

    def psiV(v):
        return _psi_cusp(v, kapV, params.t_k, x, n1, n2, alV, beV)

    def coarse_excess(lobes_spec):
        mx = -math.inf
        for (x0_, x1_, hh) in lobes_spec:
            edge = np.linspace(x0_, x1_, 60)
            pts = np.concatenate([edge + 1j * hh, edge - 1j * hh,
                                  x0_ + 1j * hh * np.linspace(-1, 1, 20),
                                  x1_ + 1j * hh * np.linspace(-1, 1, 20)])
            mx = max(mx, float((-psiV(pts).real).max()))
        return mx

    # candidate V-loop geometries: one lobe around both poles (pierced by the
    # line when it falls inside), or two lobes split at the line; extents hug
    # the poles, heights trade the y^2/2 growth against the pole logarithm
    h_opts = sorted({round(h, 6), 0.45, 0.7, 1.0})
    margins = (0.45, 1.0)
    split_ok = beV + split_clear < sig_v < alV - split_clear
    # the pierced configuration needs the 1/(U-V) crossing patches resolved,
    # which costs ~1e-4 relative accuracy; split keeps full precision while
    # its exponent excess stays within the cancellation headroom, hence the
    # penalty of ~ln(1e10) exponent units
    pierced_penalty = 22.0
    candidates = []
    for hh in h_opts:
        for mL in margins:
            for mR in margins:
                x0_, x1_ = beV - mL, alV + mR
                if split_ok:
                    candidates.append(
                        (coarse_excess([(x0_, sig_v - d, hh), (sig_v + d, x1_, hh)]),
                         ("split", x0_, x1_, hh)))
                if x0_ < sig_v < x1_:
                    candidates.append(
                        (coarse_excess([(x0_, x1_, hh)]) + pierced_penalty,
                         ("pierced", x0_, x1_, hh)))
                else:
                    candidates.append(
                        (coarse_excess([(x0_, x1_, hh)]), ("plain", x0_, x1_, hh)))
    _, (mode, x_left, x_right, h) = min(candidates, key=lambda c: c[0])

    lobes = []
    crossing = None
    if mode == "split":
        lobes.append(_rect_lobe_nodes(x_left, sig_v - d, h, spec, inner=inner))
        lobes.append(_rect_lobe_nodes(sig_v + d, x_right, h, spec, inner=inner))
    elif mode == "plain":
        lobes.append(_rect_lobe_nodes(x_left, x_right, h, spec, inner=inner))
    else:
        lobes.append(_rect_lobe_nodes(x_left, x_right, h, spec, cross_at=sig_v,
                                      inner=1e-4))
        crossing = (x_left, x_right, h)
    V = np.concatenate([l[0] for l in lobes])
    WV = np.concatenate([l[1] for l in lobes])
    if crossing is None:
        U, WU = _uline_rule(sig, L, spec, inner_scale=inner)
    else:
        U, WU = _crossing_uline(sig, L, h * kapV / kapU, d, spec, inner,
                                ysad=abs(gU.imag))
    PsiU = psiU(U)
    PsiV = psiV(V)
    CU = PsiU.real.max()
    CV = (-PsiV.real).max()
    EU = np.exp(PsiU - CU)
    EV = np.exp(-PsiV - CV)
    M = (WV[:, None] * WU[None, :]) * kapU * kapV / (kapU * U[None, :] - kapV * V[:, None])
    S = np.einsum("v,vu,u->", EV, M, EU)
    pref = -1.0 / (2.0 * math.pi**2 * math.sqrt((1.0 - params.t_k) * (1.0 - params.t_l)))
    val = pref * S
    absmass0 = np.einsum("v,vu,u->", np.abs(EV), np.abs(M), np.abs(EU))
    if abs(pref) * absmass0 * math.exp(min(CU + CV, 700.0)) < 1e-9:
        # rigorous bound: the whole configuration is negligibly small
        return 0.0, 0.0
    # residue sweep for a pierced lobe: relative to the line placed fully to
    # the right of the lobe, every boundary point whose pole image lies right
    # of the line shifts the U-integral by -2*pi*i exp(PsiU at the image); the
    # compensating arc runs along the lobe's own CCW restriction to the right
    # of the line, i.e. from the bottom crossing to the top crossing.
    if crossing is not None:
        x0_, x1_, hh = crossing
        pts = [sig_v - 1j * hh, x1_ - 1j * hh, x1_ + 1j * hh, sig_v + 1j * hh]
        Zc, Wc = [], []
        for a_, b_ in zip(pts[:-1], pts[1:]):
            zc, wc = segment_rule(a_, b_, max(4, spec.panels // 2), spec.nodes_per_panel)
            Zc.append(zc)
            Wc.append(wc)
        Zc = np.concatenate(Zc)
        Wc = np.concatenate(Wc)
        arc = np.sum(Wc * np.exp(psiU(Zc * kapV / kapU) - psiV(Zc) - CU - CV))
        val = val + pref * 2j * math.pi * kapV * arc
    if params.t_k < params.t_l:
        dt = params.t_l - params.t_k
        logext = (-0.5 * math.log(math.pi * dt) - (x - y) ** 2 / dt
                  + x * x / (1.0 - params.t_k) - y * y / (1.0 - params.t_l))
        val = val - math.exp(min(logext - (CU + CV), 700.0))
    noise = 1e-14 * absmass0
    if abs(val) < 30 * noise and abs(val) * math.exp(min(CU + CV, 700)) > 1e-10:
        raise QuadratureError(
            "adaptive finite-n kernel lost all significant digits",
            achieved=float(absmass0 * 1e-16 * math.exp(min(CU + CV, 700))))
    if abs(val.imag) > max(2e-7 * (1.0 + abs(val.real)), 30 * noise):
        raise QuadratureError(
            "adaptive finite-n kernel has non-negligible imaginary part",
            achieved=float(abs(val.imag)))
    return complex(val.real), CU + CV


def _in_cusp_window(params, x, y):
    """Cusp-tier contours keep full precision only where the action's linear
    tilt n (z - z0) stays moderate along the truncated contour; beyond that
    the saddle-adapted tier takes over."""
    crit = params.critical()
    t0, z0 = crit.t0, crit.z0
    n = params.n
    if abs(params.t_k - t0) > 0.03 or abs(params.t_l - t0) > 0.03:
        return False
    # two validity limits: cancellation grows like n dz^2, and the truncated
    # contour tail decays no faster than exp(-n(log(sqrt(2)/dz) - 1))
    w_tail = math.sqrt(2.0) * math.exp(-1.0 - 12.0 / n)
    for t, coord in ((params.t_k, x), (params.t_l, y)):
        c = math.sqrt(t * (1 - t) / 2.0)
        z = coord / (math.sqrt(n) * c)
        dz = abs(z - z0)
        if dz > 0.6 or n * dz * dz > 4.5 or dz > w_tail:
            return False
    return True


def finite_n_kernel_scaled(params: FiniteKernelParams, x: float, y: float,
                           spec: QuadratureSpec | None = None,
                           contours: str = "auto"):
    """Finite-n kernel as (mantissa, log_scale): value = mantissa*exp(log_scale).

    contours: 'cusp' forces the critical-point contours (valid in the scaling
    window around the cusp), 'adaptive' the saddle-adapted ones, 'auto' picks.
    """
    spec = spec or QuadratureSpec()
    if contours not in ("auto", "cusp", "adaptive"):
        raise ValueError("contours must be auto|cusp|adaptive")
    use_cusp = contours == "cusp" or (contours == "auto" and _in_cusp_window(params, x, y))
    if use_cusp:
        vals, ls = _finite_cusp_grid(params, [x], [y], spec)
        return complex(vals[0, 0]), ls
    val, ls = _finite_adaptive(params, x, y, spec)
    return val, ls


def finite_n_kernel(params: FiniteKernelParams, x: float, y: float,
                    spec: QuadratureSpec | None = None,
                    contours: str = "auto") -> float:
    """Finite-n two-target bridge kernel H_n(x, y; t_k, t_l) in Brownian
    coordinates (targets at a*sqrt(n), b*sqrt(n)).  See finite_n_kernel_scaled
    for an overflow-safe variant."""
    val, ls = finite_n_kernel_scaled(params, x, y, spec, contours)
    out = val * math.exp(min(ls, 700.0))
    if abs(out.imag) > 1e-8 * (1.0 + abs(out.real)):
        raise QuadratureError("finite-n kernel value has non-negligible imaginary part")
    return float(out.real)


def finite_n_kernel_grid(params: FiniteKernelParams, xs, ys,
                         spec: QuadratureSpec | None = None):
    """Cusp-tier kernel values on a grid; returns (values, log_scale)."""
    spec = spec or QuadratureSpec()
    vals, ls = _finite_cusp_grid(params, xs, ys, spec)
    return vals.real, ls


def finite_n_diagonal(n: int, a: float, b: float, p: float, t: float, lams,
                      spec: QuadratureSpec | None = None):
    """Diagonal profile H_n(lam, lam; t, t) over an array of positions.

    Far outside the equilibrium support the diagonal is exponentially small
    and the adaptive quadrature can lose all significant digits; such points
    are reported as 0 (the equilibrium density certifies they are negligible),
    while a digit loss inside the support is re-raised.
    """
    spec = spec or QuadratureSpec()
    params = FiniteKernelParams(n=n, a=a, b=b, p=p, t_k=t, t_l=t)
    cfg = TargetConfig(targets=(b, a), fractions=(1.0 - params.p_eff, params.p_eff),
                       time=t)
    c = math.sqrt(t * (1 - t) / 2.0)
    out = np.empty(len(lams))
    for i, lam in enumerate(np.asarray(lams, dtype=float)):
        try:
            out[i] = finite_n_kernel(params, lam, lam, spec)
        except QuadratureError:
            dens = solve_stieltjes(cfg, lam / (math.sqrt(n) * c)).density
            if dens > 1e-8:
                raise
            out[i] = 0.0
    return out


def kernel_grid_csv_lines(s, t, xs, ys, values, spec):
    """CSV dump `x,y,value` with the grid metadata comment line."""
    lines = [f"# s={s:.17g} t={t:.17g} L={spec.truncation_radius:.17g} "
             f"panels={spec.panels} nodes={spec.nodes_per_panel}"]
    lines.append("x,y,value")
    for i, xv in enumerate(xs):
        for j, yv in enumerate(ys):
            lines.append(f"{xv:.17g},{yv:.17g},{values[i, j]:.17g}")
    return lines
