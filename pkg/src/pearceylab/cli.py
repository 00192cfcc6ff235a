"""Command-line front end.

Every output begins with one manifest comment line recording the tool
version, the subcommand, its full flag set, and the seed, so identical
manifests reproduce identical files for deterministic subcommands (wall time
is reported on stderr, never in the output).  Numbers print with 17
significant digits; interval unions parse as `y1,y2;y3,y4`.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from dataclasses import dataclass

import numpy as np

from . import __version__
from ._quad import QuadratureError, QuadratureSpec
from . import ensemble_mc as mc
from . import fredholm as fh
from . import pde_lab as pl
from . import scaling as sc
from . import spectral_curve as sp
from . import kernels as kn

__all__ = ["RunManifest", "dispatch", "main"]


@dataclass(frozen=True)
class RunManifest:
    subcommand: str
    flags: str
    seed: int | None
    version: str
    wall_time: float

    def header(self):
        seed = "none" if self.seed is None else str(self.seed)
        return (f"# pearceylab={self.version} cmd={self.subcommand} "
                f"seed={seed} flags=[{self.flags}]")


def _fmt(v):
    return f"{v:.17g}" if isinstance(v, float) else str(v)


def _kv_block(pairs):
    return [f"{k}={_fmt(v)}" for k, v in pairs]


def _parse_floats(text):
    return tuple(float(v) for v in text.split(","))


def _parse_interval_union(text):
    eps = []
    for part in text.split(";"):
        eps.extend(float(v) for v in part.split(","))
    return fh.IntervalUnion(tuple(eps))


def _config_from(args):
    return sp.TargetConfig(targets=_parse_floats(args.targets),
                           fractions=_parse_floats(args.fractions),
                           time=getattr(args, "t", 0.5) or 0.5)


def _quad_spec(args):
    return QuadratureSpec(truncation_radius=args.L, panels=args.panels,
                          nodes_per_panel=args.nodes)


# ---------------------------------------------------------------------------
# subcommand handlers: each returns a list of output lines


def _cmd_cusp(args):
    c = sp.find_cusp(args.a, args.b, args.p)
    fields = ["q", "r", "p", "t0", "x0", "z0", "u0", "g0", "c0", "mu", "bigA",
              "alpha", "beta"]
    return _kv_block((f, getattr(c, f)) for f in fields)


def _cmd_density(args):
    cfg = _config_from(args)
    zg = np.linspace(args.zmin, args.zmax, args.num)
    return sp.density_csv_lines(sp.sweep_density(cfg, zg))


def _cmd_support(args):
    s = sp.support_endpoints(args.alpha, args.beta, args.p)
    lines = _kv_block([("endpoints", ",".join(f"{v:.17g}" for v in s.endpoints))])
    for i, (a, b) in enumerate(s.intervals):
        lines.append(f"interval{i}={a:.17g},{b:.17g}")
    return lines


def _cmd_track(args):
    cfg = sp.TargetConfig(targets=_parse_floats(args.targets),
                          fractions=_parse_floats(args.fractions), time=0.5)
    events = sp.track_merges(cfg, args.tmin, args.tmax, args.steps)
    lines = ["T_c,z_c,t_c,left_index,right_index"]
    for e in events:
        lines.append(f"{e.T_c:.17g},{e.z_c:.17g},{sp.time_from_rescaled(e.T_c):.17g},"
                     f"{e.left_index},{e.right_index}")
    return lines


def _cmd_kernel(args):
    spec = _quad_spec(args)
    xs = np.linspace(*_parse_floats(args.xgrid)[:2], int(_parse_floats(args.xgrid)[2]))
    ys = np.linspace(*_parse_floats(args.ygrid)[:2], int(_parse_floats(args.ygrid)[2]))
    if args.form == "double":
        vals = kn.pearcey_kernel_grid(args.s, args.t, xs, ys, spec)
    else:
        if args.s != args.t:
            raise ValueError("pq form requires s == t")
        vals = kn.pearcey_kernel_matrix(args.t, xs, ys, spec)
    return kn.kernel_grid_csv_lines(args.s, args.t, xs, ys, vals, spec)


def _cmd_gap(args):
    spec = _quad_spec(args)
    E = _parse_interval_union(args.E)
    res = fh.gap_probability(fh.pearcey_kernel_handle(args.t, spec), E, args.m)
    return _kv_block([("value", res.value), ("log_value", res.log_value),
                      ("error_estimate", res.error_estimate)])


def _cmd_multigap(args):
    spec = _quad_spec(args)
    times = _parse_floats(args.times)
    sets = [_parse_interval_union(s) for s in args.sets.split("|")]
    res = fh.multitime_gap(times, sets, args.m, spec)
    return _kv_block([("value", res.value), ("log_value", res.log_value),
                      ("error_estimate", res.error_estimate)])


def _cmd_resolvent(args):
    spec = _quad_spec(args)
    E = _parse_interval_union(args.E)
    rd = fh.resolvent_quantities(args.t, E, args.m, spec)
    lines = _kv_block([("u", rd.u), ("condition", rd.condition)])
    for k, a in enumerate(E.endpoints):
        lines.append(f"p_hat_a{k+1}={rd.p_hat_end[k]:.17g}")
        lines.append(f"q_hat_a{k+1}={rd.q_hat_end[k]:.17g}")
    return lines


def _cmd_pde_residual(args):
    spec = _quad_spec(args)
    y1, y2 = _parse_floats(args.E)
    center, half = 0.5 * (y1 + y2), 0.5 * (y2 - y1)
    h = args.h
    surf = pl.q_surface((args.t0 - 2 * h, args.t0 + 2 * h), center, half, h, h,
                        m=args.m, spec=spec, threads=args.threads)
    return pl.residual_csv_lines(pl.pearcey_pde_residual(surf))


def _cmd_lemma_checks(args):
    spec = _quad_spec(args)
    E = _parse_interval_union(args.E)
    lhs, rhs, du = fh.endpoint_identity_check(args.t, E, args.m, spec=spec)
    lines = _kv_block([("d2E_log_gap", lhs), ("sum_phat_qhat", rhs), ("dE_u", du),
                       ("rel_err_magnitude", abs(abs(lhs) - abs(rhs)) / abs(rhs))])
    rows, tgt1, tgt2 = pl.small_interval_checks(args.t, args.x,
                                                (1e-2, 5e-3, 2.5e-3), args.m, spec)
    lines.append("h,dEu_over_h,du_dt_over_h")
    for h, c1, c2 in rows:
        lines.append(f"{h:.17g},{c1:.17g},{c2:.17g}")
    lines += _kv_block([("target_pq_prime", tgt1), ("target_heat", tgt2)])
    return lines


def _cmd_wronskian(args):
    val = pl.wronskian_coefficient(args.t, args.x, spec=_quad_spec(args))
    return _kv_block([("value", val)])


def _cmd_scaling_solve(args):
    derivs = sc.two_target_action_derivatives(args.a, args.b, args.p)
    co = sc.solve_scaling(derivs, 2, args.tau)
    res = sc.scaling_conditions_residuals(co, derivs, args.tau)
    crit = sp.find_cusp(args.a, args.b, args.p)
    return _kv_block([
        ("alpha_y", co.alpha_y), ("beta_x", co.beta_x), ("alpha_t", co.alpha_t),
        ("alpha_x", co.alpha_x), ("expect_alpha_y", 1.0 / crit.mu),
        ("expect_beta_x", crit.c0 * crit.mu),
        ("expect_alpha_t", 2.0 * crit.c0**2 * crit.mu**2),
        ("cond1", res[0]), ("cond2", res[1]), ("cond3", res[2]), ("cond4", res[3]),
    ])


def _cmd_exponents(args):
    e = sc.critical_exponents(args.l)
    return _kv_block([("l", e.l), ("gamma_y", e.gamma_y), ("gamma_x", e.gamma_x),
                      ("gamma_t", e.gamma_t)])


def _cmd_descent_check(args):
    u, v = kn.build_contours(args.q, QuadratureSpec(truncation_radius=args.L))
    rep = sc.contour_descent_check(args.q, v, args.samples, u_contour=u)
    lines = _kv_block([("passed", rep.passed), ("worst", rep.worst),
                       ("checked_points", rep.checked_points)])
    if not rep.passed:
        raise ArithmeticError(f"descent check failed: worst rise {rep.worst:.3e}")
    return lines


def _cmd_converge(args):
    spec = _quad_spec(args)
    n_list = [int(v) for v in args.n.split(",")]
    probe = {"taus": _parse_floats(args.taus)} if args.taus else None
    study = sc.convergence_study(args.a, args.b, args.p, n_list, probe, spec)
    return sc.convergence_csv_lines(study)


def _cmd_sample_spectrum(args):
    cfg = _config_from(args)
    samples = mc.sample_spectra(args.n, cfg, args.seed, args.count,
                               threads=args.threads)
    return mc.spectra_csv_lines(samples)


def _cmd_sample_paths(args):
    cfg = _config_from(args)
    bundle = mc.sample_bridge_paths(args.n, cfg, args.steps, args.seed)
    return mc.paths_csv_lines(bundle)


def _cmd_compare_density(args):
    cfg = _config_from(args)
    samples = mc.sample_spectra(args.n, cfg, args.seed, args.count,
                               threads=args.threads)
    pooled = np.concatenate([s.eigenvalues for s in samples])
    grid = mc.predicted_density_fn(cfg, pooled.min() - 0.5, pooled.max() + 0.5)
    ks = mc.density_compare(samples, grid)
    return _kv_block([("ks", ks), ("n", args.n), ("count", args.count)])


_HANDLERS = {
    "cusp": _cmd_cusp, "density": _cmd_density, "support": _cmd_support,
    "track": _cmd_track, "kernel": _cmd_kernel, "gap": _cmd_gap,
    "multigap": _cmd_multigap, "resolvent": _cmd_resolvent,
    "pde-residual": _cmd_pde_residual, "lemma-checks": _cmd_lemma_checks,
    "wronskian": _cmd_wronskian, "scaling-solve": _cmd_scaling_solve,
    "exponents": _cmd_exponents, "descent-check": _cmd_descent_check,
    "converge": _cmd_converge, "sample-spectrum": _cmd_sample_spectrum,
    "sample-paths": _cmd_sample_paths, "compare-density": _cmd_compare_density,
}


def _add_quad_flags(p):
    p.add_argument("--L", type=float, default=6.0)
    p.add_argument("--panels", type=int, default=8)
    p.add_argument("--nodes", type=int, default=32)


def build_parser():
    ap = argparse.ArgumentParser(prog="pearceylab")
    ap.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                    help="cap worker parallelism (results are thread-count independent)")
    sub = ap.add_subparsers(dest="cmd", required=True)

    def new(name, **kw):
        p = sub.add_parser(name, **kw)
        p.add_argument("--out", default=None, help="output path (default stdout)")
        _add_quad_flags(p)
        return p

    p = new("cusp")
    for f in ("a", "b", "p"):
        p.add_argument(f"--{f}", type=float, required=True)
    p = new("density")
    p.add_argument("--targets", required=True)
    p.add_argument("--fractions", required=True)
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--zmin", type=float, required=True)
    p.add_argument("--zmax", type=float, required=True)
    p.add_argument("--num", type=int, default=201)
    p = new("support")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--p", type=float, required=True)
    p = new("track")
    p.add_argument("--targets", required=True)
    p.add_argument("--fractions", required=True)
    p.add_argument("--tmin", type=float, required=True)
    p.add_argument("--tmax", type=float, required=True)
    p.add_argument("--steps", type=int, default=40)
    p = new("kernel")
    p.add_argument("--s", type=float, required=True)
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--xgrid", required=True, help="lo,hi,num")
    p.add_argument("--ygrid", required=True, help="lo,hi,num")
    p.add_argument("--form", choices=("double", "pq"), default="double")
    p = new("gap")
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--E", required=True)
    p.add_argument("--m", type=int, default=40)
    p = new("multigap")
    p.add_argument("--times", required=True)
    p.add_argument("--sets", required=True, help="interval unions separated by |")
    p.add_argument("--m", type=int, default=32)
    p = new("resolvent")
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--E", required=True)
    p.add_argument("--m", type=int, default=48)
    p = new("pde-residual")
    p.add_argument("--t0", type=float, required=True)
    p.add_argument("--E", required=True, help="y1,y2 (one interval)")
    p.add_argument("--h", type=float, default=0.05)
    p.add_argument("--m", type=int, default=48)
    p = new("lemma-checks")
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--E", required=True)
    p.add_argument("--x", type=float, default=0.0)
    p.add_argument("--m", type=int, default=48)
    p = new("wronskian")
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--x", type=float, required=True)
    p = new("scaling-solve")
    for f in ("a", "b", "p"):
        p.add_argument(f"--{f}", type=float, required=True)
    p.add_argument("--tau", type=float, default=1.0)
    p = new("exponents")
    p.add_argument("--l", type=int, required=True)
    p = new("descent-check")
    p.add_argument("--q", type=float, required=True)
    p.add_argument("--samples", type=int, default=200)
    p = new("converge")
    for f in ("a", "b", "p"):
        p.add_argument(f"--{f}", type=float, required=True)
    p.add_argument("--n", required=True, help="comma-separated sizes")
    p.add_argument("--taus", default="")
    p = new("sample-spectrum")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--targets", required=True)
    p.add_argument("--fractions", required=True)
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=int, default=1)
    p = new("sample-paths")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--targets", required=True)
    p.add_argument("--fractions", required=True)
    p.add_argument("--steps", type=int, default=40)
    p.add_argument("--seed", type=int, default=0)
    p = new("compare-density")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--targets", required=True)
    p.add_argument("--fractions", required=True)
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=int, default=200)
    return ap


def dispatch(argv):
    """Run one subcommand; returns the exit code (0 ok, 1 numerical, 2 usage)."""
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    started = time.time()
    flags = " ".join(f"{k}={v}" for k, v in sorted(vars(args).items())
                     if k not in ("out", "cmd", "threads") and v is not None)
    try:
        lines = _HANDLERS[args.cmd](args)
    except (ArithmeticError, QuadratureError, ValueError) as exc:
        print(f"pearceylab {args.cmd}: {exc}", file=sys.stderr)
        return 1
    manifest = RunManifest(subcommand=args.cmd, flags=flags,
                           seed=getattr(args, "seed", None),
                           version=__version__, wall_time=time.time() - started)
    text = "\n".join([manifest.header()] + list(lines)) + "\n"
    if args.out:
        with open(args.out, "w") as fh_:
            fh_.write(text)
    else:
        sys.stdout.write(text)
    print(f"pearceylab {args.cmd}: wall_time={manifest.wall_time:.3f}s", file=sys.stderr)
    return 0


def main(argv=None):
    return dispatch(sys.argv[1:] if argv is None else argv)


if __name__ == "__main__":
    raise SystemExit(main())
