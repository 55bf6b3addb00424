"""Command-line entry point ``sim``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np
from pydantic import ValidationError

from .feedback import ccdf_eps, ccdf_eps_upper_bound, elog_eps_bounds, hit_probability
from .montecarlo import ExperimentConfig
from .output import run_configs
from .presets import PRESETS, preset_configs


def _describe_validation(err: ValidationError) -> str:
    lines = []
    for e in err.errors():
        loc = ".".join(str(x) for x in e["loc"]) or "config"
        lines.append(f"invalid field '{loc}': {e['msg']}")
    return "\n".join(lines)


def _load_configs(path: Path) -> list[ExperimentConfig]:
    doc = json.loads(path.read_text(encoding="utf-8"))
    items = doc if isinstance(doc, list) else doc.get("curves", [doc]) if isinstance(doc, dict) else None
    if not items:
        raise ValueError("config must be a JSON object, a list of objects, or {'curves': [...]}")
    return [ExperimentConfig.model_validate(x) for x in items]


def cmd_run_preset(args) -> int:
    if args.name not in PRESETS:
        print(f"error: unknown preset {args.name!r}; available: {', '.join(sorted(PRESETS))}",
              file=sys.stderr)
        return 2
    configs = preset_configs(args.name, seed=args.seed, trials=args.trials)
    out = Path(args.out) if args.out else Path("results") / args.name
    for p in run_configs(configs, out, args.name, seed=args.seed):
        print(p)
    return 0


def cmd_run(args) -> int:
    path = Path(args.config)
    try:
        configs = _load_configs(path)
    except FileNotFoundError:
        print(f"error: config file not found: {path}", file=sys.stderr)
        return 2
    except json.JSONDecodeError as e:
        print(f"error: config is not valid JSON: {e}", file=sys.stderr)
        return 2
    except ValidationError as e:
        print(_describe_validation(e), file=sys.stderr)
        return 2
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    out = Path(args.out) if args.out else Path("results") / path.stem
    for p in run_configs(configs, out, path.stem):
        print(p)
    return 0


def cmd_analytics(args) -> int:
    if args.nt < 1 or args.m < 1:
        print("error: --nt and --m must be positive", file=sys.stderr)
        return 2
    if args.kind == "ccdf":
        print("delta,ccdf,upper_bound")
        for delta in np.round(np.arange(0.0, 0.5 + 1e-9, args.step), 12):
            print(f"{delta:.6g},{ccdf_eps(float(delta), args.nt, args.m)!r},"
                  f"{ccdf_eps_upper_bound(float(delta), args.nt, args.m)!r}")
        return 0
    try:
        lo, up = elog_eps_bounds(args.nt, args.m)
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    print("n_t,m,p_alpha,lower,upper")
    print(f"{args.nt},{args.m},{hit_probability(args.nt, args.m)!r},{lo!r},{up!r}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sim", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run-preset", help="reproduce one figure")
    p.add_argument("name", help=f"one of: {', '.join(sorted(PRESETS))}")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=None, help="override trials per grid point")
    p.add_argument("--out", default=None, help="output directory (default results/<name>)")
    p.set_defaults(func=cmd_run_preset)

    p = sub.add_parser("run", help="run curves from a JSON config file")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("analytics", help="closed-form quantization-error statistics")
    p.add_argument("kind", choices=["ccdf", "elog-bounds"])
    p.add_argument("--nt", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--step", type=float, default=0.05, help="delta spacing for ccdf")
    p.set_defaults(func=cmd_analytics)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "trials", None) is not None and args.trials < 1:
        print("error: --trials must be >= 1", file=sys.stderr)
        return 2
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
