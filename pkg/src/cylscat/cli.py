"""
Command-line driver.

    cylscat <command> [--config PATH | --model NAME] [--out DIR] [--h LIST]
                      [--threads N] [--tol NAME=VALUE ...] [command options]

Every command writes CSV reports (and, where useful, gnuplot scripts) into
``--out`` and prints a one-line summary.  Reports carry the tool version and
the SHA-256 of the configuration text; reruns with the same configuration
produce identical bytes whatever the thread count.

Exit status: 0 success, 1 ``verify`` failure, 2 configuration error,
3 numerical error.
"""

from __future__ import annotations

import argparse
import math
import os
import sys

import numpy as np

from . import __version__
from .channels import assemble, write_matrix
from .classical import BoundaryPoint, domain_scan, scattering_map
from .config import ExperimentConfig, load_config, parse_float_list, preset_config
from .errors import ConfigError, CylscatError
from .io import header_lines, write_csv, write_text

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2, 3

# tolerances adjustable with --tol NAME=VALUE
DEFAULT_TOLS = {
    "unitary_input": 1e-6,  # eigenphases: accepted unitarity defect of S_U
    "power": 1e-4,  # resolvent power iteration, relative
    "husimi_threshold": 0.01,  # coherent: Husimi mass threshold for the centre
    "verify_scale": 1.0,  # verify: multiplies every check tolerance
}


def _hs(args, cfg: ExperimentConfig, default=None):
    if args.h:
        return parse_float_list(args.h, "--h")
    if cfg.hs:
        return cfg.hs
    return (cfg.spec.h,) if default is None else tuple(default)


def _tols(pairs):
    tols = dict(DEFAULT_TOLS)
    for item in pairs or ():
        name, sep, val = item.partition("=")
        if not sep or name not in tols:
            raise ConfigError(f"--tol expects NAME=VALUE with NAME in {sorted(tols)}, got {item!r}")
        try:
            tols[name] = float(val)
        except ValueError:
            raise ConfigError(f"--tol {name}: not a number: {val!r}") from None
    return tols


def _threads(args, cfg):
    if args.threads is not None:
        n = args.threads
    elif os.environ.get("CYLSCAT_THREADS"):
        try:
            n = int(os.environ["CYLSCAT_THREADS"])
        except ValueError:
            raise ConfigError("CYLSCAT_THREADS must be an integer") from None
    else:
        n = cfg.threads or 1
    if n < 1:
        raise ConfigError("thread count must be at least 1")
    return n


def _tag(h: float) -> str:
    return f"{h:g}"


class Context:
    def __init__(self, args, cfg: ExperimentConfig):
        self.args = args
        self.cfg = cfg
        self.spec = cfg.spec
        self.out = args.out or cfg.out or "."
        self.tols = _tols(args.tol)
        self.threads = _threads(args, cfg)

    def header(self, extra=()):
        return header_lines(self.cfg.sha256, self.args.command, extra)

    def path(self, name):
        return os.path.join(self.out, name)


# --- commands -----------------------------------------------------------------


def cmd_kappa(ctx: Context):
    a = ctx.args
    res = scattering_map(BoundaryPoint(a.end, a.theta, a.eta), ctx.spec)
    row = {
        "end": a.end, "theta": float(a.theta) % (2 * math.pi), "eta": a.eta,
        "outcome": "exited" if res.exited else "trapped",
        "kappa_end": res.exit.end if res.exited else "",
        "kappa_theta": res.exit.theta if res.exited else math.nan,
        "kappa_eta": res.exit.eta if res.exited else math.nan,
        "t_plus": res.t_plus, "energy_drift": res.energy_drift,
    }
    write_csv(ctx.path("kappa.csv"), list(row), [row], ctx.header())
    print(",".join(str(v) for v in row.values()))


def cmd_domain(ctx: Context):
    a = ctx.args
    thetas = np.linspace(0.0, 2 * math.pi, a.n_theta, endpoint=False)
    etas = np.linspace(-a.eta_max, a.eta_max, a.n_eta)
    scan = domain_scan(ctx.spec, thetas, etas, end=a.end)
    fields = ["end", "theta", "eta", "outcome", "t_plus", "theta_out", "eta_out", "energy_drift"]
    write_csv(ctx.path("domain.csv"), fields, scan.rows(),
              ctx.header([f"trapped_fraction {scan.trapped_fraction!r}"]))
    print(f"trapped fraction {scan.trapped_fraction:.6g} over {scan.exited.size} cells")


SMATRIX_FIELDS = ["m", "tau_m", "re_rL", "im_rL", "re_t", "im_t", "re_rR", "im_rR", "unitarity_defect"]


def cmd_smatrix(ctx: Context):
    for h in _hs(ctx.args, ctx.cfg):
        sp = ctx.spec.with_h(h)
        S, SU = assemble(sp)
        extra = [f"h {h!r}", f"threshold_modes {list(S.channels.threshold_modes)}"]
        write_csv(ctx.path(f"smatrix_h{_tag(h)}.csv"), SMATRIX_FIELDS, S.rows(), ctx.header(extra))
        write_matrix(ctx.path(f"smatrix_h{_tag(h)}.txt"), S, ctx.header(extra))
        print(f"h={h:g} modes={len(S.modes)} unitarity={SU.unitarity_defect():.3e} "
              f"symmetry={SU.symmetry_defect():.3e}")


def cmd_smatrix_prop(ctx: Context):
    from .propagator import smatrix_via_propagator

    fields = ["m", "end_in", "end_out", "route_stationary_re", "route_stationary_im",
              "route_propagator_re", "route_propagator_im", "abs_err", "rel_err"]
    for h in _hs(ctx.args, ctx.cfg):
        res = smatrix_via_propagator(ctx.spec.with_h(h), workers=ctx.threads)
        extra = [f"h {h!r}", f"t_psi {res.cfg.t_psi!r}", f"M {res.cfg.M}",
                 f"max_relative_error {res.max_relative_error()!r}"]
        write_csv(ctx.path(f"smatrix_prop_h{_tag(h)}.csv"), fields, res.rows(), ctx.header(extra))
        print(f"h={h:g} max relative error {res.max_relative_error():.3e}")


def cmd_phases(ctx: Context):
    from .spectral import eigenphases, histogram, histogram_script

    for h in _hs(ctx.args, ctx.cfg):
        SU = assemble(ctx.spec.with_h(h))[1]
        ps = eigenphases(SU, tol=ctx.tols["unitary_input"], model_id=ctx.spec.profile.kind)
        rows = ({"m": int(m), "index": k, "phase": float(p[k])} for m, p in zip(ps.modes, ps.phases) for k in (0, 1))
        write_csv(ctx.path(f"phases_h{_tag(h)}.csv"), ["m", "index", "phase"], rows, ctx.header([f"h {h!r}"]))
        counts, edges = histogram(ps.phases, ctx.args.bins)
        hist = f"hist_h{_tag(h)}.dat"
        write_text(ctx.path(hist), "".join(f"{edges[i]!r} {edges[i + 1]!r} {c}\n" for i, c in enumerate(counts)))
        write_text(ctx.path(hist + ".gp"), histogram_script(hist, f"eigenphases h={h:g}"))
        print(f"h={h:g} phases={ps.count} modulus_defect={ps.modulus_defect:.3e}")


def cmd_equidist(ctx: Context):
    from .spectral import equidist_sweep, histogram_script, trend_script

    rep = equidist_sweep(ctx.spec, _hs(ctx.args, ctx.cfg), bins=ctx.args.bins,
                         allow_unverified=ctx.args.allow_unverified, unitary_tol=ctx.tols["unitary_input"])
    fields = ["h", "dim", "f_id", "re_trace_scaled", "im_trace_scaled", "target_re", "target_im", "cdf_dev"]
    extra = [f"caveat {rep.caveat}"] if rep.caveat else []
    extra.append("tolerances are calibration values; the limit theorem gives no rate")
    write_csv(ctx.path("equidist.csv"), fields, rep.rows(), ctx.header(extra))
    for p in rep.points:
        _, edges = np.histogram([], bins=ctx.args.bins, range=(0.0, 2 * math.pi))
        hist = f"hist_h{_tag(p.h)}.dat"
        write_text(ctx.path(hist), "".join(f"{edges[i]!r} {edges[i + 1]!r} {c}\n" for i, c in enumerate(p.counts)))
        write_text(ctx.path(hist + ".gp"), histogram_script(hist, f"eigenphases h={p.h:g}"))
    for fid in rep.points[0].traces:
        name = f"trend_{fid}.dat"
        write_text(ctx.path(name), "".join(f"{p.h!r} {abs(p.traces[fid])!r}\n" for p in rep.points))
        write_text(ctx.path(name + ".gp"), trend_script(name, f"|h Tr {fid}|"))
    for p in rep.points:
        print(f"h={p.h:g} dim={p.dim} h*dim={p.h * p.dim:.4f} cdf_dev={p.cdf_dev:.4f}")


def default_centers():
    """32 centres: eta0 in {+-0.4, +-0.5}, four angles, both ends."""
    return [(e, th, eta) for e in ("L", "R") for th in (0.5, 2.0, 3.5, 5.0) for eta in (-0.5, -0.4, 0.4, 0.5)]


def cmd_coherent(ctx: Context):
    from .phasespace import fio_check

    a = ctx.args
    centers = [(a.end, a.theta, a.eta)] if a.eta is not None else default_centers()
    h = _hs(a, ctx.cfg)[0]
    hs = (h, h / 4) if a.refine else (h,)
    rep = fio_check(centers, ctx.spec.with_h(h), hs, threshold=ctx.tols["husimi_threshold"])
    fields = ["y_end", "theta0", "eta0", "kappa_end", "kappa_theta", "kappa_eta",
              "center_end", "center_theta", "center_eta", "dist", "h"]
    write_csv(ctx.path("coherent.csv"), fields, (r.as_dict() for r in rep.rows), ctx.header())
    for hh in hs:
        print(f"h={hh:g} end match {rep.end_match_fraction(hh):.3f} "
              f"median distance {rep.median_distance(hh) / math.sqrt(hh):.3f} sqrt(h)")


def cmd_dichotomy(ctx: Context):
    from .spectral import dichotomy_report

    rep = dichotomy_report(ctx.spec.with_h(_hs(ctx.args, ctx.cfg)[0]))
    fields = ["m", "hm", "trans", "refl", "band", "passed"]
    rows = ({"m": r.m, "hm": r.hm, "trans": r.trans, "refl": r.refl, "band": r.band,
             "passed": "" if r.passed is None else r.passed} for r in rep.rows)
    write_csv(ctx.path("dichotomy.csv"), fields, rows, ctx.header([f"eta_c {rep.eta_c!r}"]))
    print(f"eta_c={rep.eta_c:.4f} h={rep.h:g} {'pass' if rep.passed else 'FAIL'}")


def cmd_resolvent(ctx: Context):
    from .resolvent import WeightedResolventProblem, resolvent_sweep

    a = ctx.args
    prob = WeightedResolventProblem(ctx.spec, eps=a.eps, alpha=a.alpha, n_tau=a.n_tau)
    sw = resolvent_sweep(prob, _hs(a, ctx.cfg, default=(0.1, 0.05, 0.025)), tol=ctx.tols["power"])
    slope = sw.slope() if len(sw.points) > 1 else math.nan
    write_csv(ctx.path("resolvent.csv"), ["tau", "h", "norm", "absorber_check_ratio"], sw.rows(prob),
              ctx.header([f"eps {a.eps!r}", f"alpha {a.alpha!r}"]))
    summary = [{"h": p.h, "sup_norm": p.value, "tau_at_max": p.tau_at_max,
                "absorber_check_ratio": p.absorber_ratio, "absorber_sensitive": p.absorber_sensitive}
               for p in sw.points]
    write_csv(ctx.path("resolvent_summary.csv"), list(summary[0]), summary,
              ctx.header([f"loglog_slope {slope!r}"]))
    for p in sw.points:
        print(f"h={p.h:g} sup={p.value:.6g} at tau={p.tau_at_max:.3f} absorber ratio {p.absorber_ratio:.4f}")
    print(f"log-log slope {slope:.4f}")


def cmd_verify(ctx: Context):
    from .verify import run_suite

    results = run_suite(ctx.args.suite, scale=ctx.tols["verify_scale"])
    fields = ["suite", "check", "value", "tol", "passed"]
    write_csv(ctx.path(f"verify_{ctx.args.suite}.csv"), fields, (r.as_dict() for r in results), ctx.header())
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'} {r.suite}/{r.name}: {r.value:.3e} (tol {r.tol:.1e})")
    return EXIT_OK if all(r.passed for r in results) else EXIT_VERIFY


COMMANDS = {
    "kappa": cmd_kappa, "domain": cmd_domain, "smatrix": cmd_smatrix, "smatrix-prop": cmd_smatrix_prop,
    "phases": cmd_phases, "equidist": cmd_equidist, "coherent": cmd_coherent, "dichotomy": cmd_dichotomy,
    "resolvent": cmd_resolvent, "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    src = common.add_mutually_exclusive_group()
    src.add_argument("--config", help="INI model/experiment configuration")
    src.add_argument("--model", choices=("cylinder", "bulge", "hourglass"), default="bulge",
                     help="built-in model when no --config is given (default: bulge)")
    common.add_argument("--out", help="output directory (default: config [run] out, else .)")
    common.add_argument("--h", help="comma-separated list of h values")
    common.add_argument("--threads", type=int, help="worker threads (env CYLSCAT_THREADS)")
    common.add_argument("--tol", action="append", metavar="NAME=VALUE",
                        help=f"tolerance override; names: {', '.join(DEFAULT_TOLS)}")

    p = argparse.ArgumentParser(prog="cylscat", description=__doc__.split("\n\n")[0].strip())
    p.add_argument("--version", action="version", version=f"cylscat {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, help_):
        return sub.add_parser(name, parents=[common], help=help_)

    k = add("kappa", "scattering map at one boundary point")
    k.add_argument("--theta", type=float, required=True)
    k.add_argument("--eta", type=float, required=True)
    k.add_argument("--end", choices=("L", "R"), default="R")

    d = add("domain", "exited/trapped scan over a (theta, eta) grid")
    d.add_argument("--n-theta", type=int, default=16)
    d.add_argument("--n-eta", type=int, default=101)
    d.add_argument("--eta-max", type=float, default=0.99)
    d.add_argument("--end", choices=("L", "R"), default="R")

    add("smatrix", "stationary block S-matrix per h")
    add("smatrix-prop", "S from the propagator identity vs the stationary route")

    ph = add("phases", "eigenphases of S_U with histogram data")
    ph.add_argument("--bins", type=int, default=32)

    e = add("equidist", "scaled traces, Weyl counts and CDF deviation over an h sweep")
    e.add_argument("--bins", type=int, default=32)
    e.add_argument("--allow-unverified", action="store_true",
                   help="permit models whose limit-theorem hypotheses are not checked (hourglass)")

    c = add("coherent", "transport of coherent states by S_U against kappa")
    c.add_argument("--theta", type=float, default=0.0)
    c.add_argument("--eta", type=float, default=None, help="single centre; default is a 32-centre set")
    c.add_argument("--end", choices=("L", "R"), default="L")
    c.add_argument("--refine", action="store_true", help="also run at h/4")

    add("dichotomy", "per-mode transmission/reflection around eta_c (hourglass)")

    r = add("resolvent", "weighted resolvent norm sweep")
    r.add_argument("--eps", type=float, default=0.1)
    r.add_argument("--alpha", type=float, default=1.0)
    r.add_argument("--n-tau", type=int, default=21)

    v = add("verify", "run an invariant/oracle suite")
    v.add_argument("--suite", choices=("free", "bulge", "hourglass", "all"), default="free")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else preset_config(args.model)
        ctx = Context(args, cfg)
        status = COMMANDS[args.command](ctx)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (CylscatError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical error ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        # invalid physical input from the command line (e.g. |eta| >= 1)
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK if status is None else status


if __name__ == "__main__":
    sys.exit(main())
