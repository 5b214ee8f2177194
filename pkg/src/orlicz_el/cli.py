"""``orlicz-el`` command-line front end.

Subcommands: ``analyze`` (indices, Delta_2 scans, conjugate tables,
orderings), ``verify`` (inequality sweeps), ``check`` (hypothesis gate
only) and ``solve`` (gate then minimize).

Exit codes: 0 success / converged, 1 configuration or usage error,
2 solver did not converge, 3 hypotheses rejected.
"""
from __future__ import annotations

import argparse
import hashlib
import inspect
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import kernels
from .config import InstanceConfig, load_config
from .errors import BadParam, ConfigError, OrliczError
from .hypotheses import HypothesisSetup, default_envelope, gate
from .lagrangians import REGISTRY, make_lagrangian
from .nfunction import builtin, check_delta2, check_ordering, conjugate, mo_indices
from .orlicz import GridFunction, write_csv
from .probes import HypothesisProbeConfig, IndexProbeConfig, ProbeConfig
from .report import Report, hypothesis_items, write_rows
from .solver import MeanSearch, ProblemSpec, SolverOptions, minimize
from .suites import run_all

EXIT_OK, EXIT_CONFIG, EXIT_NOT_CONVERGED, EXIT_REJECTED = 0, 1, 2, 3

log = logging.getLogger("orlicz_el")


def _verbosity() -> str:
    v = os.environ.get("ORLICZ_EL_LOG", "normal").strip().lower()
    return v if v in ("quiet", "normal", "debug") else "normal"


def _setup_logging(level: str) -> None:
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    root = logging.getLogger("orlicz_el")
    root.handlers[:] = [handler]
    root.setLevel({"quiet": logging.ERROR, "normal": logging.WARNING, "debug": logging.DEBUG}[level])


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="instance configuration file (INI)")
    common.add_argument("--seed", type=int, help="random seed (overrides the config)")
    common.add_argument("--out", type=Path, help="directory for the report and CSV artifacts")
    common.add_argument("--probes", type=int, help="probe count (random hypothesis draws, or sweep samples)")
    p = argparse.ArgumentParser(prog="orlicz-el", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    a = sub.add_parser("analyze", parents=[common], help="indices, Delta_2 and orderings of N-functions")
    a.add_argument("--family", help="N-function family (power, exp_family, log_perturbed)")
    a.add_argument("--n", type=float, help="exp_family order")
    a.add_argument("--p", type=float, help="power exponent")
    a.add_argument("--k", type=float, help="log_perturbed order")
    v = sub.add_parser("verify", parents=[common], help="seeded inequality sweeps")
    v.add_argument("--sobolev-scale", type=float, default=1.0, help=argparse.SUPPRESS)
    for name in ("check", "solve"):
        s = sub.add_parser(name, parents=[common],
                           help="run the hypothesis gate" if name == "check" else "gate, then minimize the action")
        s.add_argument("--force", action="store_true", help="proceed even if required checks fail")
    return p


def _hash(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _emit(rep: Report, out: Path, name: str = "report.txt") -> None:
    text = rep.render()
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        with open(out / name, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    if _verbosity() != "quiet":
        sys.stdout.write(text)


def _load(args) -> InstanceConfig:
    cfg = load_config(args.config) if args.config else InstanceConfig()
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigError("--seed: must be a nonnegative integer")
        cfg.seed = args.seed
    if args.probes is not None and args.probes < 1:
        raise ConfigError("--probes: must be positive")
    return cfg


def _out_dir(args, cfg) -> Path:
    if args.out is not None:
        return args.out
    return Path(cfg.out_dir) if cfg.out_dir else None


def _run_block(rep: Report, command: str, cfg: InstanceConfig, digest: str, extra=()) -> None:
    rep.block("run", [("command", command), ("instance", cfg.name), ("config_hash", digest),
                      ("seed", cfg.seed)] + list(extra))


# --------------------------------------------------------------------------
# analyze

def cmd_analyze(args) -> int:
    cfg = _load(args)
    funcs = list(cfg.analyze_functions)
    if args.family is not None:
        keys = {"power": "p", "exp_family": "n", "log_perturbed": "k"}
        if args.family not in keys:
            raise ConfigError(f"--family: unknown family {args.family!r}; expected one of {sorted(keys)}")
        key = keys[args.family]
        val = getattr(args, key)
        if val is None:
            raise ConfigError(f"--{key}: required for family {args.family!r}")
        try:
            phi = builtin(args.family, **{key: val})
        except BadParam as exc:
            raise ConfigError(f"--{key}: {exc}") from None
        funcs.append((phi.name, phi))
    if not funcs:
        raise ConfigError("analyze: give --family or an [analyze] functions entry")
    digest = cfg.digest if args.config else _hash(f"analyze {args.family} {args.n} {args.p} {args.k}")
    probe = ProbeConfig(seed=cfg.seed)
    iprobe = IndexProbeConfig()
    rep = Report()
    _run_block(rep, "analyze", cfg, digest,
               [("probe_range", (probe.lo, probe.hi)), ("index_u_range", (iprobe.u_lo, iprobe.u_hi))])
    out = _out_dir(args, cfg)
    for label, phi in funcs:
        idx = mo_indices(phi, iprobe)
        psi = conjugate(phi)
        cidx = mo_indices(psi, iprobe)
        items = [("function", phi.name), ("alpha", idx.alpha), ("beta", idx.beta),
                 ("alpha_stderr", idx.alpha_stderr), ("beta_stderr", idx.beta_stderr),
                 ("conjugate_alpha", cidx.alpha), ("conjugate_beta", cidx.beta),
                 ("index_complementarity", 1 / idx.alpha + 1 / cidx.beta - 1)]
        for variant in ("global", "at_infinity", "at_zero"):
            d2 = check_delta2(phi, variant, probe)
            items.append((f"delta2_{variant}", "holds" if d2.holds else "fails"))
            items.append((f"delta2_{variant}_sup_ratio", d2.sup_ratio))
        rep.block(f"nfunction {label}", items)
        if out is not None:
            out.mkdir(parents=True, exist_ok=True)
            t = np.geomspace(1e-3, 1e3, 61)
            with np.errstate(over="ignore"):
                rows = zip(t, phi.eval(t), phi.deriv(t), psi.eval(t))
                write_rows(out / f"conjugate_{_slug(label)}.csv", ["t", "phi", "dphi", "psi"], rows)
    for a_label, a, b_label, b in cfg.analyze_pairs:
        o = check_ordering(a, b, "essentially_stronger", probe)
        rep.block(f"ordering {a_label} << {b_label}",
                  [("holds", o.holds), ("witness_a", o.witness_a), ("log_x0", o.log_x0)])
    _emit(rep, out)
    return EXIT_OK


def _slug(s: str) -> str:
    return "".join(c if c.isalnum() else "_" for c in s).strip("_")


# --------------------------------------------------------------------------
# verify

def cmd_verify(args) -> int:
    cfg = _load(args)
    samples = args.probes if args.probes is not None else cfg.verify_samples
    results = run_all(samples, cfg.seed, sobolev_scale=args.sobolev_scale)
    digest = cfg.digest if args.config else _hash("verify")
    rep = Report()
    _run_block(rep, "verify", cfg, digest, [("samples", samples), ("slack_floor", -1e-7)])
    for r in results:
        rep.block(f"sweep {r.name}", [("samples", r.samples), ("violations", r.violations),
                                      ("worst_slack", r.worst_slack), ("worst_index", r.worst_index)])
    out = _out_dir(args, cfg)
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        write_rows(out / "verify.csv", ["sweep", "samples", "violations", "worst_slack", "worst_index"],
                   [(r.name, r.samples, r.violations, r.worst_slack, r.worst_index) for r in results])
    _emit(rep, out)
    return EXIT_OK


# --------------------------------------------------------------------------
# check / solve

def _build(cfg: InstanceConfig, args):
    if cfg.lagrangian is None:
        raise ConfigError("[lagrangian] section with a 'name' is required")
    h = cfg.hypotheses
    if "phi" not in h:
        raise ConfigError("[hypotheses] phi (or [nfunctions] phi) is required")
    params = dict(cfg.lagrangian_params)
    sig = inspect.signature(REGISTRY[cfg.lagrangian]).parameters
    if "dim" in sig:
        params["dim"] = cfg.d
    elif cfg.d != 1:
        raise ConfigError(f"[grid] d: lagrangian {cfg.lagrangian!r} is one-dimensional")
    try:
        L = make_lagrangian(cfg.lagrangian, cfg.T, **params)
    except BadParam as exc:
        raise ConfigError(f"[lagrangian]: {exc}") from None
    phi = h["phi"]
    setup = None
    if "phi0" in h or "phi1" in h:
        if not ("phi0" in h and "phi1" in h):
            raise ConfigError("[hypotheses]: phi0 and phi1 must be given together")
        kw = {}
        if "radii" in h:
            lo, hi, n = h["radii"]
            kw["radii"] = tuple(np.logspace(lo, hi, n))
        if "threshold" in h:
            kw["threshold"] = h["threshold"]
        setup = HypothesisSetup(h["phi0"], h["phi1"], h.get("b1", 1.0), h.get("b2", 1.0),
                                h.get("psi1"), h.get("nu"), envelope=default_envelope(L, phi), **kw)
    s = dict(cfg.solver)
    init_spec = s.pop("init", "mean")
    try:
        opts = SolverOptions(**s)
    except BadParam as exc:
        raise ConfigError(f"[solver]: {exc}") from None
    problem = ProblemSpec(L, phi, cfg.T, cfg.d, cfg.N, options=opts, hypotheses=setup)
    if init_spec == "mean":
        init = MeanSearch(opts.mean_radius)
    else:
        c = 0.0 if init_spec == "zero" else float(init_spec.split(":", 1)[1])
        init = GridFunction(cfg.T, np.full((cfg.N, cfg.d), c))
    probes = HypothesisProbeConfig(x_max=h.get("x_max", 1e3), y_max=h.get("y_max", 30.0),
                                   random=args.probes if args.probes is not None else int(h.get("random", 256)),
                                   seed=cfg.seed)
    return problem, setup, init, probes


def _gate_blocks(rep: Report, g) -> None:
    for r in g.reports:
        rep.block(f"hypothesis {r.condition}", hypothesis_items(r))
    rep.block("gate", [("passed", g.passed), ("failed", ", ".join(g.failed) or "none")])


def _gate_rows(out: Path, g) -> None:
    write_rows(out / "hypotheses.csv", ["condition", "required", "passed", "worst_slack", "probes"],
               [(r.condition, r.required, r.passed, r.worst_slack, r.probes) for r in g.reports])


def _probe_block(probes: HypothesisProbeConfig, nprobe: ProbeConfig):
    return [("hypothesis_x_range", (0.0, probes.x_max)), ("hypothesis_y_range", (0.0, probes.y_max)),
            ("hypothesis_random_probes", probes.random), ("nfunction_probe_range", (nprobe.lo, nprobe.hi))]


def cmd_check(args) -> int:
    cfg = _load(args)
    problem, setup, _, probes = _build(cfg, args)
    nprobe = ProbeConfig(seed=cfg.seed)
    g = gate(problem, setup, probes, nprobe)
    rep = Report()
    _run_block(rep, "check", cfg, cfg.digest, _probe_block(probes, nprobe))
    _gate_blocks(rep, g)
    out = _out_dir(args, cfg)
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        _gate_rows(out, g)
    _emit(rep, out)
    return EXIT_OK if g.passed or args.force else EXIT_REJECTED


def cmd_solve(args) -> int:
    cfg = _load(args)
    problem, setup, init, probes = _build(cfg, args)
    nprobe = ProbeConfig(seed=cfg.seed)
    g = gate(problem, setup, probes, nprobe)
    rep = Report()
    _run_block(rep, "solve", cfg, cfg.digest,
               _probe_block(probes, nprobe) + [("grid", (cfg.T, cfg.N, cfg.d)), ("force", args.force)])
    _gate_blocks(rep, g)
    out = _out_dir(args, cfg) or Path("out")
    out.mkdir(parents=True, exist_ok=True)
    _gate_rows(out, g)
    if not g.passed and not args.force:
        rep.block("solve", [("status", "rejected")])
        _emit(rep, out)
        return EXIT_REJECTED
    res = minimize(problem, init, gate=g, force=args.force)
    items = [("status", "converged" if res.converged else "not_converged"), ("message", res.message),
             ("iterations", res.iterations), ("action", res.action), ("grad_norm", res.grad_norm),
             ("el_residual_max", res.el_residual_max), ("el_residual_l2", res.el_residual_l2),
             ("boundary_gap", res.boundary_gap),
             ("sup_norm", float(np.max(res.minimizer.magnitude())))]
    L = problem.lagrangian
    if L.exact is not None:
        err = float(np.max(np.abs(res.minimizer.values - L.exact(res.minimizer.times()))))
        items.append(("sup_error_vs_exact", err))
    rep.block("solve", items)
    write_csv(res.minimizer, out / "minimizer.csv")
    write_rows(out / "action_history.csv", ["iteration", "action"], enumerate(res.action_history))
    _emit(rep, out)
    return EXIT_OK if res.converged else EXIT_NOT_CONVERGED


_COMMANDS = {"analyze": cmd_analyze, "verify": cmd_verify, "check": cmd_check, "solve": cmd_solve}


def main(argv=None) -> int:
    _setup_logging(_verbosity())
    args = _parser().parse_args(argv)
    log.debug("kernel backend: %s", kernels.BACKEND)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"orlicz-el: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OrliczError as exc:
        print(f"orlicz-el: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
