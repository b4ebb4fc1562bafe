"""Command-line entry point.

Every subcommand accepts ``--seed``, ``--out`` and ``--config`` plus flags
that override individual configuration keys, and writes a
``manifest.json`` next to its outputs. Exit status: 0 on success, 2 for
configuration errors (including bad usage), 3 for numerical failures.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import _backend, config
from .amplification import amplification_report, validate_against_simulation
from .dynamics import SourceSchedule, integrate
from .empirical import fixture_paths, ingest, run_pipeline
from .errors import AdoptnetError, ConfigError, ConstructionError, NumericalError
from .feynman_kac import estimate, make_walk_generator
from .graph import save_network
from .intervention import HIST_BINS, Shock, run_duration_sweep, run_shock_experiment, target_nodes
from .jumps import regime_summary, simulate_jump_diffusion
from .reductions import run_all

log = logging.getLogger("adoptnet")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3

# (flag, config key, type)
OVERRIDES = [
    ("--preset", None, str),
    ("--net", "network", str),
    ("--n", "n", int),
    ("--network-seed", "network_seed", int),
    ("--kernel", "spatial_kernel", str),
    ("--nu-s", "nu_s", float),
    ("--nu-n", "nu_n", float),
    ("--lambda-x", "lambda_x", float),
    ("--kappa", "kappa", float),
    ("--dt", "dt", float),
    ("--t-end", "t_end", float),
    ("--lambda0", "lambda0", float),
    ("--lambda1", "lambda1", float),
    ("--tau-star", "tau_star", float),
    ("--absorb-level", "absorb_level", float),
    ("--intensity", "intensity", float),
    ("--duration", "duration", float),
    ("--node-count", "node_count", int),
    ("--seeds", "seeds", int),
]


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(f"{self.prog}: {message}")


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=None, help="base random seed (default 0)")
    p.add_argument("--out", default=None, help="output file (.csv) or directory")
    p.add_argument("--config", default=None, help="flat JSON config or a run manifest")
    p.add_argument("--backend", choices=("python", "cython"), default=None, help="kernel backend")
    p.add_argument("--workers", type=int, default=1, help="processes for seed ensembles")
    for flag, key, typ in OVERRIDES:
        p.add_argument(flag, type=typ, default=None, dest=(key or "preset"))
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="adoptnet", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    common = [_common()]
    s = sub.add_parser("simulate", parents=common, help="one jump-diffusion (or deterministic) run")
    s.add_argument("--deterministic", action="store_true", help="integrate without jumps")
    sub.add_parser("amplify", parents=common, help="amplification factors and channel decomposition")
    s = sub.add_parser("fk-validate", parents=common, help="path estimates against the deterministic solver")
    s.add_argument("--paths", type=int, default=None, dest="fk_paths")
    s.add_argument("--nodes", type=int, default=None, dest="fk_nodes")
    s.add_argument("--t", type=float, default=None, dest="fk_t")
    s = sub.add_parser("intervene", parents=common, help="duration and shock-size sweeps")
    s.add_argument("--durations", default=None, help="comma-separated durations")
    s.add_argument("--node-counts", default=None, help="comma-separated numbers of targeted nodes")
    sub.add_parser("montecarlo", parents=common, help="the preset's Monte Carlo experiment")
    s = sub.add_parser("empirical", parents=common, help="bank-panel pipeline")
    s.add_argument("--panel", default=None)
    s.add_argument("--exposures", default=None)
    sub.add_parser("reductions", parents=common, help="limiting-case checks")
    return parser


def _resolve(args):
    file_cfg, file_seed = ({}, None)
    if args.config:
        file_cfg, file_seed = config.load_config_file(args.config)
    overrides = {key: getattr(args, key) for _, key, _ in OVERRIDES if key}
    for key in ("fk_paths", "fk_nodes", "fk_t"):
        overrides[key] = getattr(args, key, None)
    if getattr(args, "durations", None):
        overrides["durations"] = args.durations
    if args.command == "fk-validate" and args.lambda_x is None and "lambda_x" not in file_cfg:
        # path sampling needs a nonnegative rate matrix
        overrides["lambda_x"] = 0.0
    cfg = config.resolve(args.preset, file_cfg, overrides)
    seed = args.seed if args.seed is not None else (file_seed if file_seed is not None else 0)
    return cfg, int(seed)


def _out_target(args, default_name: str) -> tuple[Path, Path]:
    """Return (primary output file, directory for side outputs)."""
    out = args.out or os.environ.get("ADOPTNET_OUT") or f"adoptnet-out/{args.command}"
    out = Path(out)
    if out.suffix.lower() in (".csv", ".json"):
        out.parent.mkdir(parents=True, exist_ok=True)
        return out, out.parent
    out.mkdir(parents=True, exist_ok=True)
    return out / default_name, out


def _manifest_path(primary: Path, directory: Path) -> Path:
    if primary.parent == directory and primary.suffix and primary.name not in _DEFAULT_NAMES:
        return directory / f"{primary.stem}.manifest.json"
    return directory / "manifest.json"


_DEFAULT_NAMES = {"trajectory.csv", "amplification.csv", "fk_validation.csv", "intervention.csv",
                  "montecarlo.csv", "regressions.csv", "reductions.csv"}


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return "nan" if math.isnan(v) else repr(float(v))
    if isinstance(v, (np.integer,)):
        return int(v)
    return v


def write_rows(path: Path, rows, columns) -> Path:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(row[c]) for c in columns])
    return path


def write_json(path: Path, doc) -> Path:
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")
    return path


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, (np.bool_,)):
        return bool(o)
    raise TypeError(type(o))


def _finish(args, cfg, seed, primary, directory, outputs, extra=None):
    backend = _backend.get(args.backend).NAME
    doc = config.manifest(args.command, cfg, seed, outputs, backend, extra)
    path = write_json(_manifest_path(primary, directory), doc)
    print(f"wrote {', '.join(str(o) for o in outputs)}; manifest {path}")


def cmd_simulate(args, cfg, seed):
    net, ops = config.network(cfg)
    params = config.model_params(cfg)
    primary, d = _out_target(args, "trajectory.csv")
    targets = target_nodes(ops, params, cfg["node_count"])
    source = Shock(cfg["node_count"], cfg["intensity"], cfg["duration"]).schedule(targets)
    if args.deterministic:
        traj = integrate(ops, params, source, backend=args.backend)
    else:
        traj = simulate_jump_diffusion(ops, params, config.jump_params(cfg), source, None, seed,
                                       backend=args.backend)
    outputs = [traj.to_csv(primary), traj.events.to_csv(d / "events.csv"), *save_network(net, d)]
    rep = regime_summary(traj, config.jump_params(cfg))
    summary = {"terminal_mean": float(traj.terminal.mean()), "crossing_time": rep.crossing_time,
               "jump_counts": rep.jump_counts, "jump_rate": rep.jump_rate, "velocity": rep.velocity,
               "targets": targets}
    outputs.append(write_json(d / "summary.json", summary))
    _finish(args, cfg, seed, primary, d, outputs)


def _amp_rows(rep):
    rank = rep.rank
    for i in range(rep.n):
        yield dict(node=i, total=rep.total[i], spatial=rep.spatial[i], network=rep.network[i],
                   interaction=rep.interaction[i], rank=int(rank[i]))


AMP_COLUMNS = ["node", "total", "spatial", "network", "interaction", "rank"]


def cmd_amplify(args, cfg, seed):
    _, ops = config.network(cfg)
    rep = amplification_report(ops, config.model_params(cfg))
    primary, d = _out_target(args, "amplification.csv")
    _finish(args, cfg, seed, primary, d, [write_rows(primary, _amp_rows(rep), AMP_COLUMNS)])


def cmd_fk_validate(args, cfg, seed):
    _, ops = config.network(cfg)
    params = config.model_params(cfg).with_(t_end=cfg["fk_t"])
    walks = make_walk_generator(ops, params)
    rng = np.random.default_rng(seed)
    tau0 = rng.uniform(0.0, 0.5, ops.n)
    targets = target_nodes(ops, params, cfg["node_count"])
    source = Shock(cfg["node_count"], cfg["intensity"], cfg["duration"]).schedule(targets)
    pde = integrate(ops, params, source, tau0, clamp=False, backend=args.backend).terminal
    nodes = np.sort(rng.choice(ops.n, size=min(cfg["fk_nodes"], ops.n), replace=False))
    rows = []
    for i in nodes:
        est = estimate(walks, params.kappa, source, tau0, int(i), cfg["fk_t"], cfg["fk_paths"],
                       seed=seed, backend=args.backend)
        z = (est.estimate - pde[i]) / est.standard_error if est.standard_error > 0 else 0.0
        rows.append(dict(node=int(i), fk_estimate=est.estimate, se=est.standard_error,
                         pde_value=float(pde[i]), z=z))
    primary, d = _out_target(args, "fk_validation.csv")
    out = write_rows(primary, rows, ["node", "fk_estimate", "se", "pde_value", "z"])
    within = sum(abs(r["z"]) <= 3 for r in rows)
    print(f"{within}/{len(rows)} nodes within 3 standard errors")
    _finish(args, cfg, seed, primary, d, [out])


INTERVENE_COLUMNS = ["seed", "duration", "node_count", "terminal_mean", "crossed", "crossing_time"]


def cmd_intervene(args, cfg, seed):
    _, ops = config.network(cfg)
    params, jumps = config.model_params(cfg), config.jump_params(cfg)
    counts = [cfg["node_count"]]
    if args.node_counts:
        try:
            counts = [int(c) for c in args.node_counts.split(",") if c.strip()]
        except ValueError:
            raise ConfigError(f"bad --node-counts {args.node_counts!r}") from None
    amp = amplification_report(ops, params)
    rows = []
    for c in counts:
        sweep = run_duration_sweep(ops, params, jumps, cfg["durations"], cfg["intensity"], cfg["seeds"],
                                   node_count=c, seed=seed, amp=amp, workers=args.workers,
                                   backend=args.backend)
        rows.extend(dict(r, node_count=c) for r in sweep.rows())
        for dur, med in zip(sweep.durations, sweep.medians):
            print(f"node_count={c} duration={dur:g}: median terminal adoption {med:.4f}")
    primary, d = _out_target(args, "intervention.csv")
    _finish(args, cfg, seed, primary, d, [write_rows(primary, rows, INTERVENE_COLUMNS)])


MC_COLUMNS = ["shock", "node_count", "intensity", "duration", "seed", "terminal_mean", "crossed",
              "crossing_time"] + [f"hist_{i}" for i in range(len(HIST_BINS) - 1)]


def _ensemble_rows(label, summary):
    for k, row in enumerate(summary.rows()):
        row.update(shock=label, node_count=summary.shock.node_count, intensity=summary.shock.intensity,
                   duration=summary.shock.duration)
        row.update({f"hist_{b}": int(v) for b, v in enumerate(summary.histograms[k])})
        yield row


def cmd_montecarlo(args, cfg, seed):
    _, ops = config.network(cfg)
    params, jumps = config.model_params(cfg), config.jump_params(cfg)
    primary, d = _out_target(args, "montecarlo.csv")
    exp = cfg["experiment"]
    if exp == "shock":
        amp = amplification_report(ops, params)
        rows = []
        for label, count in (("small", cfg["small_node_count"]), ("large", cfg["node_count"])):
            summ = run_shock_experiment(ops, params, jumps, Shock(count, cfg["intensity"], cfg["duration"]),
                                        cfg["seeds"], seed, amp=amp, workers=args.workers, backend=args.backend)
            print(f"{label} shock ({count} nodes): median terminal adoption {summ.median:.4f}")
            rows.extend(_ensemble_rows(label, summ))
        out = write_rows(primary, rows, MC_COLUMNS)
    elif exp == "duration":
        amp = amplification_report(ops, params)
        sweep = run_duration_sweep(ops, params, jumps, cfg["durations"], cfg["intensity"], cfg["seeds"],
                                   node_count=cfg["node_count"], seed=seed, amp=amp, workers=args.workers,
                                   backend=args.backend)
        rows = []
        for dur, summ in zip(sweep.durations, sweep.summaries):
            print(f"duration {dur:g}: median terminal adoption {summ.median:.4f}")
            rows.extend(_ensemble_rows(f"T={dur:g}", summ))
        out = write_rows(primary, rows, MC_COLUMNS)
    elif exp == "validation":
        val = validate_against_simulation(ops, params, seed=seed, backend=args.backend)
        print(f"correlation simulated vs closed form: {val.correlation:.6f}")
        rows = [dict(node=i, theoretical=val.theoretical[i], simulated=val.simulated[i]) for i in range(ops.n)]
        out = write_rows(primary, rows, ["node", "theoretical", "simulated"])
        write_json(d / "validation.json", {"correlation": val.correlation, "t_end": val.t_end})
    else:
        rep = amplification_report(ops, params)
        top = rep.top(min(15, rep.n))
        rows = [dict(r, rank=int(rep.rank[r["node"]])) for r in _amp_rows(rep) if r["node"] in set(top)]
        rows.sort(key=lambda r: r["rank"])
        out = write_rows(primary, rows, AMP_COLUMNS)
        print(f"top node {top[0]}: network {rep.network[top[0]]:.3f} vs spatial {rep.spatial[top[0]]:.3f}; "
              f"negative interaction in {int((rep.interaction[top] < 0).sum())} of {len(top)}")
    _finish(args, cfg, seed, primary, d, [out])


def cmd_empirical(args, cfg, seed):
    panel_csv, exposures_csv = args.panel, args.exposures
    if (panel_csv is None) != (exposures_csv is None):
        raise ConfigError("--panel and --exposures must be given together")
    if panel_csv is None:
        panel_csv, exposures_csv = fixture_paths()
        log.info("using the shipped synthetic fixture")
    panel, net = ingest(panel_csv, exposures_csv, cfg["spatial_kernel"])
    res = run_pipeline(panel, net, config.model_params(cfg))
    primary, d = _out_target(args, "regressions.csv")
    rows = []
    for model, reg in enumerate(res.regressions, start=1):
        for r in reg.rows():
            rows.append(dict(r, model=model, r_squared=reg.r_squared, n=reg.n))
    outputs = [write_rows(primary, rows, ["model", "term", "estimate", "std_error", "t", "p", "r_squared", "n"])]
    outputs.append(write_rows(d / "groups.csv", res.groups.rows(),
                              ["group", "count", "mean_days", "mean_amplification", "amplification_share"]))
    f = res.scurve
    outputs.append(write_json(d / "scurve.json", {"L": f.L, "k": f.k, "t0": f.t0, "rss": f.rss, "refined": f.refined}))
    g = res.groups
    outputs.append(write_json(d / "summary.json", {
        "spearman_amplification_days": {"rho": res.correlation.rho, "p": res.correlation.p},
        "pre_vs_post_ttest": {"t": g.pre_vs_post.t, "p": g.pre_vs_post.p, "df": g.pre_vs_post.df},
        "post_spearman": {"rho": g.post_correlation.rho, "p": g.post_correlation.p},
        "amplification": dict(zip(panel.ids, res.amplification.tolist())),
    }))
    for r in g.groups:
        print(f"{r.name:>5}: n={r.count} mean days {r.mean_days:.1f} mean amplification "
              f"{r.mean_amplification:.3f} share {r.amplification_share:.3f}")
    _finish(args, cfg, seed, primary, d, outputs,
            {"inputs": {"panel": str(panel_csv), "exposures": str(exposures_csv)}})


def cmd_reductions(args, cfg, seed):
    results = run_all(seed)
    primary, d = _out_target(args, "reductions.csv")
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'} {r.name}: {r.value:.3e} (tolerance {r.tolerance:.1e}) {r.detail}")
    rows = [dict(check=r.name, passed=r.passed, value=r.value, tolerance=r.tolerance) for r in results]
    _finish(args, cfg, seed, primary, d, [write_rows(primary, rows, ["check", "passed", "value", "tolerance"])])
    return EXIT_OK if all(r.passed for r in results) else EXIT_NUMERICAL


COMMANDS = {
    "simulate": cmd_simulate,
    "amplify": cmd_amplify,
    "fk-validate": cmd_fk_validate,
    "intervene": cmd_intervene,
    "montecarlo": cmd_montecarlo,
    "empirical": cmd_empirical,
    "reductions": cmd_reductions,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg, seed = _resolve(args)
        code = COMMANDS[args.command](args, cfg, seed)
        return EXIT_OK if code is None else code
    except (ConfigError, ConstructionError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except AdoptnetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
