"""Command-line entry point: ``tlsdecay {simulate,preset,t1,sweep}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .. import __version__
from ..core import LorentzBath, SeriesCapExceeded
from ..polaron_me import dephasing_rate, relaxation_rate
from .config import ConfigError, parse_config
from .records import write_outputs
from .runs import PRESETS, default_out_dir, run_preset, simulate, sweep

log = logging.getLogger("tlsdecay")


def _csv_floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tlsdecay", description="Decoherence dynamics of a modulated dissipative TLS.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run every applicable solver for one scenario file")
    s.add_argument("--config", required=True, type=Path)
    s.add_argument("--out", type=Path, default=None, help="output directory (overrides config out_dir)")

    s = sub.add_parser("preset", help="reproduce one figure's parameter sweep")
    s.add_argument("name", choices=PRESETS)
    s.add_argument("--out", type=Path, default=None)
    s.add_argument("--workers", type=int, default=None)

    s = sub.add_parser("t1", help="print the relaxation and dephasing times")
    s.add_argument("--alpha", type=float, required=True)
    s.add_argument("--omega-c", type=float, required=True)
    s.add_argument("--epsilon", type=float, default=1.0)
    s.add_argument("--omega0", type=float, required=True)
    s.add_argument("--lambda", dest="lam", type=float, required=True)

    s = sub.add_parser("sweep", help="scan one knob over a list of values")
    s.add_argument("--config", required=True, type=Path)
    s.add_argument("--knob", required=True, choices=("lambda", "Lambda", "alpha"))
    s.add_argument("--values", required=True, type=_csv_floats)
    s.add_argument("--out", type=Path, default=None)
    s.add_argument("--workers", type=int, default=None)
    return p


def _out_dir(arg, cfg=None) -> Path:
    if arg is not None:
        return arg
    if cfg is not None and cfg.out_dir:
        return Path(cfg.out_dir)
    return default_out_dir()


def _report(record, paths) -> None:
    print(f"run {record.run_id}: {len(record.curves)} curve(s) in {record.duration_s:.2f} s")
    for path in paths:
        print(f"  {path}")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "t1":
            bath = LorentzBath(args.alpha, args.omega_c, args.epsilon)
            rate = relaxation_rate(bath, args.lam, args.omega0)
            print(json.dumps({"T1": 1.0 / rate, "T2": 1.0 / dephasing_rate(bath, args.lam, args.omega0),
                              "relaxation_rate": rate}))
            return 0
        if args.command == "preset":
            log.info("running preset %s", args.name)
            record = run_preset(args.name, out_dir=_out_dir(args.out), workers=args.workers, write=False)
            _report(record, write_outputs(record, _out_dir(args.out)))
            return 0
        cfg = parse_config(args.config)
        if args.command == "simulate":
            record = simulate(cfg)
        else:
            record = sweep(cfg, args.knob, args.values, workers=args.workers)
        _report(record, write_outputs(record, _out_dir(args.out, cfg)))
        return 0
    except (ConfigError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, SeriesCapExceeded, ArithmeticError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
