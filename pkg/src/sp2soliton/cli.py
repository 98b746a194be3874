"""
Command-line front end.

    sp2soliton integrate --lambda -1 --b 1.5 --t-max 8 --out traj.csv
    sp2soliton classify  --lambda 1 --b 1
    sp2soliton lmap      --q-grid 0.1,1,10 --out lmap.csv
    sp2soliton lmap      --invert 2
    sp2soliton phase     --lambda -1 --grid 50x50 --out phase.csv
    sp2soliton verify    --suite all

Exit codes: 0 success, 1 usage error or failed verification, 2 StepFailure.
Relative output paths are resolved against $SP2SOLITON_OUT_DIR when set.
Flags override values from --config (a flat TOML file), which override defaults.
"""

import argparse
import math
import os
import sys

from . import __version__, records

EXIT_OK, EXIT_USAGE, EXIT_STEPFAIL = 0, 1, 2
OUT_DIR_ENV = "SP2SOLITON_OUT_DIR"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _floats(text, n=None, name="value"):
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"{name} must be a comma-separated list of numbers")
    if n is not None and len(vals) != n:
        raise UsageError(f"{name} needs exactly {n} numbers")
    return vals


def _run_flags(p):
    p.add_argument("--lambda", dest="lam", type=float)
    src = p.add_mutually_exclusive_group()
    src.add_argument("--b", type=float, help="series start at the singular orbit with y(0) = b")
    src.add_argument("--init", help="raw start x,y,tau2,t0")
    p.add_argument("--order", type=int, help="series order (default 20)")
    p.add_argument("--t0", type=float, help="series evaluation point (default b/20)")
    p.add_argument("--t-max", dest="max_t", type=float)
    p.add_argument("--g-max", dest="max_g", type=float)
    p.add_argument("--min-x", dest="min_x", type=float)
    p.add_argument("--max-warp", dest="max_warp", type=float)
    p.add_argument("--max-steps", dest="max_steps", type=int)
    p.add_argument("--rtol", type=float)
    p.add_argument("--atol", type=float)


def _common(p):
    p.add_argument("--out", help="output file (stdout when omitted)")
    p.add_argument("--format", choices=("csv", "json"))
    p.add_argument("--config", help="flat TOML file with defaults for these flags")


def build_parser():
    ap = _Parser(prog="sp2soliton", description="Sp(2)-invariant Laplacian soliton numerics")
    ap.add_argument("--version", action="version", version=f"sp2soliton {__version__}")
    sub = ap.add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    p = sub.add_parser("integrate", help="integrate one soliton and write the trajectory")
    _run_flags(p)
    _common(p)
    p = sub.add_parser("classify", help="integrate and classify the end behaviour (JSON)")
    _run_flags(p)
    _common(p)
    p = sub.add_parser("lmap", help="sweep or invert the asymptotic limit map")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--q-grid")
    g.add_argument("--invert", type=float)
    p.add_argument("--workers", type=int)
    p.add_argument("--horizon-factor", dest="horizon_factor", type=float)
    _common(p)
    p = sub.add_parser("phase", help="export the shrinker limit-system phase portrait")
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--grid", help="NAxNB grid size, e.g. 50x50")
    p.add_argument("--alpha-range", dest="alpha_range")
    p.add_argument("--beta-range", dest="beta_range")
    p.add_argument("--trajectories", type=int, help="trajectories from a circle round the fixed point")
    p.add_argument("--traj-t-max", dest="traj_t_max", type=float)
    _common(p)
    p = sub.add_parser("verify", help="run the built-in invariant suites")
    p.add_argument("--suite", choices=("all", "core", "odesys", "explicit", "limitdyn"))
    p.add_argument("--seed", type=int)
    p.add_argument("--config")
    return ap


DEFAULTS = {
    "integrate": {"format": "csv", "order": 20},
    "classify": {"format": "json", "order": 20},
    "lmap": {"format": "csv"},
    "phase": {"lam": -1.0, "grid": "50x50", "trajectories": 0, "traj_t_max": 20.0, "format": "csv"},
    "verify": {"suite": "all", "seed": 0},
}


def _load_config(path):
    import tomli

    with open(path, "rb") as fh:
        data = tomli.load(fh)
    return {k.replace("-", "_"): v for k, v in data.items()}


def resolve(args):
    """Merge flags > config file > defaults into a plain dict."""
    cfg = dict(DEFAULTS.get(args.cmd, {}))
    if getattr(args, "config", None):
        cfg.update(_load_config(args.config))
    for k, v in vars(args).items():
        if k == "config":
            continue
        if v is not None:
            cfg[k] = v
        else:
            cfg.setdefault(k, None)
    return cfg


def _out_path(path):
    if path and not os.path.isabs(path) and os.environ.get(OUT_DIR_ENV):
        return os.path.join(os.environ[OUT_DIR_ENV], path)
    return path


def _emit(text, cfg):
    path = _out_path(cfg.get("out"))
    if path:
        d = os.path.dirname(path)
        if d:
            os.makedirs(d, exist_ok=True)
        with open(path, "w", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _start(cfg):
    from .core import SolitonState
    from .series import initial_state

    if cfg["lam"] is None:
        raise UsageError("--lambda is required")
    if (cfg.get("b") is None) == (cfg.get("init") is None):
        raise UsageError("give exactly one of --b or --init")
    if cfg.get("b") is not None:
        if not cfg["b"] > 0:
            raise UsageError("--b must be positive")
        order = int(cfg["order"])
        if not 3 <= order <= 40:
            raise UsageError("--order must lie in [3, 40]")
        return initial_state(cfg["lam"], cfg["b"], order, cfg.get("t0"))
    x, y, tau2, t0 = _floats(cfg["init"], 4, "--init")
    if not (x > 0 and y > 0):
        raise UsageError("--init needs x > 0 and y > 0")
    return SolitonState(t0, x, y, tau2)


def _run_options(cfg, classify_defaults=False):
    from .classify import default_run_options
    from .integrate import IntegratorOptions

    kw = {k: cfg[k] for k in ("rtol", "atol", "max_t", "max_g", "min_x", "max_warp", "max_steps")
          if cfg.get(k) is not None}
    try:
        if classify_defaults and "max_t" not in kw and "max_g" not in kw:
            return default_run_options(cfg["lam"], cfg.get("b"), **kw)
        if "max_t" not in kw and "max_g" not in kw:
            raise UsageError("give --t-max or --g-max")
        return IntegratorOptions(**kw)
    except ValueError as e:
        raise UsageError(str(e))


def _config_record(cfg):
    return {k: v for k, v in sorted(cfg.items()) if k not in ("out",) and v is not None}


def cmd_integrate(cfg):
    from . import odesys
    from .core import SolitonParams
    from .integrate import integrate

    start = _start(cfg)
    opts = _run_options(cfg)
    traj = integrate(start, odesys.FULL, SolitonParams(cfg["lam"]), opts)
    meta = _config_record(cfg)
    meta["termination"] = traj.termination
    if cfg["format"] == "json":
        _emit(records.dumps(records.trajectory_envelope(traj, meta)), cfg)
    else:
        _emit(records.trajectory_csv(traj, meta), cfg)
    print(f"termination: {traj.termination}; samples: {len(traj.t)}", file=sys.stderr)
    return EXIT_STEPFAIL if traj.termination == "StepFailure" else EXIT_OK


def cmd_classify(cfg):
    from . import classify as C
    from . import odesys
    from .core import SolitonParams
    from .integrate import integrate

    start = _start(cfg)
    opts = _run_options(cfg, classify_defaults=True)
    lam = cfg["lam"]
    events = (C.handoff_event(),) if lam < 0 else ()
    traj = integrate(start, odesys.FULL, SolitonParams(lam), opts, events=events)
    end = C.classify_end(traj)
    _emit(records.dumps(records.classification_envelope(end, _config_record(cfg),
                                                         traj.termination)), cfg)
    return EXIT_STEPFAIL if traj.termination == "StepFailure" and end.kind == "Inconclusive" \
        else EXIT_OK


def cmd_lmap(cfg):
    from .core import DomainError
    from .lmap import CSV_HEADER, LmapOptions, lmap_eval, lmap_inverse, lmap_sweep

    kw = {}
    if cfg.get("horizon_factor"):
        kw["horizon_factor"] = cfg["horizon_factor"]
    opts = LmapOptions(**kw)
    meta = _config_record(cfg)
    if cfg.get("invert") is not None:
        try:
            res = lmap_inverse(cfg["invert"], opts)
        except DomainError as e:
            raise UsageError(str(e))
        back = lmap_eval(res.q, opts)
        out = records.header(meta)
        out.update({"kind": "lmap_inverse", "ell_target": cfg["invert"], "q": res.q,
                    "bracket": list(res.bracket), "iterations": res.iterations,
                    "round_trip_ell": back.ell, "round_trip_error": abs(back.ell - cfg["invert"]),
                    "error_est": back.error_est})
        _emit(records.dumps(out), cfg)
        return EXIT_OK
    if not cfg.get("q_grid"):
        raise UsageError("give --q-grid or --invert")
    grid = _floats(cfg["q_grid"], name="--q-grid")
    try:
        sweep = lmap_sweep(grid, opts, workers=cfg.get("workers"))
    except DomainError as e:
        raise UsageError(str(e))
    if cfg["format"] == "json":
        out = records.header(meta)
        out.update({"kind": "lmap_sweep", "monotone": sweep.monotone,
                    "violations": sweep.violations,
                    "points": [dict(zip(CSV_HEADER.split(","), p.row())) for p in sweep.points]})
        _emit(records.dumps(out), cfg)
    else:
        _emit(records.table_csv(CSV_HEADER.split(","), [p.row() for p in sweep.points], meta,
                                [f"monotone: {str(sweep.monotone).lower()}"]), cfg)
    return EXIT_OK


def _grid(text):
    try:
        a, b = (int(v) for v in text.lower().split("x"))
    except ValueError:
        raise UsageError("--grid must look like 50x50")
    if a < 2 or b < 2:
        raise UsageError("--grid needs at least 2 points per axis")
    return a, b


def cmd_phase(cfg):
    from . import limitdyn

    lam = cfg["lam"]
    if not lam < 0:
        raise UsageError("the limit system needs --lambda < 0")
    na, nb = _grid(cfg["grid"])
    ar = tuple(_floats(cfg["alpha_range"], 2, "--alpha-range")) if cfg.get("alpha_range") \
        else (-1.5, 0.5)
    br = tuple(_floats(cfg["beta_range"], 2, "--beta-range")) if cfg.get("beta_range") else None
    rows = limitdyn.phase_grid(lam, na, nb, ar, br)
    meta = _config_record(cfg)
    _emit(records.table_csv(limitdyn.PHASE_HEADER.split(","), rows, meta), cfg)
    n_traj = int(cfg.get("trajectories") or 0)
    if n_traj > 0:
        starts = limitdyn.unstable_circle(lam, 1e-3, n_traj)
        trs = limitdyn.phase_trajectories(lam, starts, cfg["traj_t_max"])
        trows = [(i, t, a, b) for i, tr in enumerate(trs) for t, (a, b) in zip(tr.t, tr.z)]
        path = cfg.get("out")
        text = records.table_csv(["traj", "t", "alpha", "beta"], trows, meta)
        if path:
            root, ext = os.path.splitext(path)
            _emit(text, {"out": root + ".traj" + (ext or ".csv")})
        else:
            sys.stdout.write(text)
    return EXIT_OK


def cmd_verify(cfg):
    from .verify import run

    checks = run(cfg["suite"], cfg["seed"])
    for c in checks:
        print(c.line())
    bad = [c for c in checks if not c.passed]
    print(f"{len(checks) - len(bad)}/{len(checks)} checks passed")
    return EXIT_USAGE if bad else EXIT_OK


COMMANDS = {"integrate": cmd_integrate, "classify": cmd_classify, "lmap": cmd_lmap,
            "phase": cmd_phase, "verify": cmd_verify}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve(args)
        return COMMANDS[args.cmd](cfg)
    except UsageError as e:
        print(f"sp2soliton {args.cmd}: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ValueError) as e:
        print(f"sp2soliton {args.cmd}: error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
