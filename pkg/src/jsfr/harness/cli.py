"""Command-line interface.

    jsfr run <config>            one trial set at the config's base point
    jsfr sweep <config>          the config's full sweep -> CSV
    jsfr verify-identities       algebra self-check
    jsfr preset <name>           sweep a packaged preset (``jsfr preset list``)

Exit codes: 0 success, 1 invalid config, 2 identity-check failure, 3 I/O error.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from importlib import resources

from .config import ConfigError, ExperimentConfig, validate
from .identities import verify_identities
from .pipeline import run_trial, trial_seed
from .sweep import SweepResult, emit_csv, summarize, sweep

EXIT_OK, EXIT_CONFIG, EXIT_IDENTITY, EXIT_IO = 0, 1, 2, 3


def preset_names():
    return sorted(p.name[:-5] for p in resources.files("jsfr.presets").iterdir()
                  if p.name.endswith(".json"))


def load_preset(name):
    path = resources.files("jsfr.presets") / f"{name}.json"
    if not path.is_file():
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(preset_names())}")
    return ExperimentConfig.from_json(path.read_text(encoding="utf-8"))


def _overrides(cfg, args):
    if args.out not in (None, "-"):
        open(args.out, "w", encoding="utf-8").close()  # fail on a bad path before simulating
    if args.trials is not None and args.trials < 1:
        raise ConfigError("--trials must be >= 1")
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    if args.trials is not None:
        cfg = replace(cfg, trials_per_point=args.trials)
    return validate(cfg)


def _write(result, out):
    if out is None or out == "-":
        emit_csv(result, sys.stdout)
    else:
        emit_csv(result, out)


def _report(result, over=()):
    keep, table = summarize(result, over)
    head = ", ".join(keep) if keep else "point"
    print(f"# mean BER per point ({head})" + (f", worst over {', '.join(over)}" if over else ""),
          file=sys.stderr)
    for key, ber in table.items():
        vals = ", ".join(f"{v:.6g}" if isinstance(v, float) else str(v) for v in key)
        print(f"{vals or '-'}: {ber:.3e}", file=sys.stderr)


def cmd_run(cfg, args):
    rows = []
    for t in range(cfg.trials_per_point):
        seed = trial_seed(cfg.seed, t)
        m = run_trial(cfg, None, seed)
        rows.append(dict(trial=t, seed=seed, ber=m.ber, evm=m.evm, q_db=m.q_db,
                         converged=m.converged, errors=m.errors, bits=m.bits, note=m.note))
        print(f"trial {t}: BER {m.ber:.3e}  EVM {m.evm:.2f} dB  Q {m.q_db:.2f} dB"
              f"{'' if m.converged else '  (not converged: ' + m.note + ')'}", file=sys.stderr)
    _write(SweepResult([], rows), args.out)


def cmd_sweep(cfg, args):
    result = sweep(cfg, workers=args.workers)
    _write(result, args.out)
    _report(result, cfg.sweep.worst_over)


def build_parser():
    p = argparse.ArgumentParser(prog="jsfr", description=__doc__.split("\n")[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--seed", type=int, help="master seed (overrides the config)")
        sp.add_argument("--out", help="CSV output path (default: stdout)")
        sp.add_argument("--trials", type=int, help="trials per point (overrides the config)")
        sp.add_argument("--workers", type=int, default=1, help="worker processes")

    sp = sub.add_parser("run", help="run the config's base point")
    sp.add_argument("config")
    common(sp)
    sp = sub.add_parser("sweep", help="run the config's sweep")
    sp.add_argument("config")
    common(sp)
    sp = sub.add_parser("verify-identities", help="check the front-end algebra")
    sp = sub.add_parser("preset", help="sweep a packaged preset ('list' to show names)")
    sp.add_argument("name")
    sp.add_argument("--dump", action="store_true", help="print the preset config and exit")
    common(sp)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "verify-identities":
            report = verify_identities()
            print("\n".join(report.lines()))
            return EXIT_OK if report.passed else EXIT_IDENTITY
        if args.command == "preset":
            if args.name == "list":
                print("\n".join(preset_names()))
                return EXIT_OK
            cfg = load_preset(args.name)
            if args.dump:
                print(cfg.to_json(), end="")
                return EXIT_OK
            cmd_sweep(_overrides(cfg, args), args)
            return EXIT_OK
        cfg = _overrides(ExperimentConfig.load(args.config), args)
        (cmd_run if args.command == "run" else cmd_sweep)(cfg, args)
        return EXIT_OK
    except ConfigError as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
