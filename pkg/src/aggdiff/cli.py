"""Command line entry point::

    aggdiff run CONFIG [--out DIR] [--sweep PARAM=v1,v2,...]
    aggdiff check
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor

from .checks import run_checks
from .config import load_config
from .errors import ConfigError
from .experiment import EXIT_IO, EXIT_OK, EXIT_PARSE, run_experiment


def _parse_sweep(text):
    if "=" not in text:
        raise ConfigError("sweep must look like PARAM=v1,v2,...", key=text)
    name, values = text.split("=", 1)
    vals = [v.strip() for v in values.split(",") if v.strip()]
    if not vals:
        raise ConfigError("sweep has no values", key=name)
    return name.strip(), vals


def _cmd_run(args) -> int:
    try:
        if args.sweep:
            name, values = _parse_sweep(args.sweep)
            cfgs = [(v, load_config(args.config, {name: v})) for v in values]
        else:
            cfgs = [(None, load_config(args.config))]
    except ConfigError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO

    def one(item):
        value, cfg = item
        out = args.out or cfg.output.dir
        if value is not None:
            out = os.path.join(out, f"{name}={value}")
        return out, run_experiment(cfg, out)

    if len(cfgs) == 1:
        results = [one(cfgs[0])]
    else:
        with ThreadPoolExecutor(max_workers=min(len(cfgs), os.cpu_count() or 1)) as pool:
            results = list(pool.map(one, cfgs))

    status = EXIT_OK
    for out, res in results:
        if res.status == EXIT_OK:
            print(f"{out}: ok")
        else:
            print(f"{out}: failed with status {res.status}: {res.error}", file=sys.stderr)
            status = status or res.status
    return status


def _cmd_check(args) -> int:
    def show(r):
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name}: {r.detail}", flush=True)

    results = run_checks(show)
    failed = sum(not r.passed for r in results)
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return 0 if failed == 0 else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="aggdiff", description="nonlocal aggregation-diffusion experiments")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run an experiment config")
    p_run.add_argument("config")
    p_run.add_argument("--out", help="output directory (overrides [output] dir)")
    p_run.add_argument("--sweep", help="PARAM=v1,v2,... (e.g. datum.P=1,5,10)")
    p_run.set_defaults(func=_cmd_run)
    p_check = sub.add_parser("check", help="run the built-in oracle suite")
    p_check.set_defaults(func=_cmd_check)
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
