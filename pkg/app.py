"""
GEMO reliability toolkit
Command-line entry point: fit, compare, reliab, ttt, sample, eval, audit
"""

import argparse
import logging
import sys
from pathlib import Path

# Add src to path for imports
sys.path.append(str(Path(__file__).resolve().parent / 'src'))
from config import get_log_level, log_settings
from utils.commands import COMMANDS, DEFAULT_FORMATS, FORMATS, RunConfig, emit, parse_fix, parse_percentiles, run
from utils.errors import ConfigError, GemoError, exit_code_for

logger = logging.getLogger("gemo")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gemo",
        description="Fit, compare and evaluate GEMO lifetime distributions.",
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--model", action="append", default=[],
                        help="<kind>, gemo-<kind> or emo-<kind> (kind: exponential, weibull, gamma, lomax, lognormal); "
                             "repeat for compare")
    parser.add_argument("--data", help="lifetime file, or bladder_cancer / glass_fiber")
    parser.add_argument("--fix", action="append", default=[], metavar="NAME=VALUE",
                        help="hold a parameter fixed (repeatable)")
    parser.add_argument("--params", help="JSON object or file with explicit parameters (fit: evaluate instead of fitting)")
    parser.add_argument("--starts", type=int, default=20, help="multi-start runs (default 20)")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--n", type=int, default=100, help="sample size for `sample`")
    parser.add_argument("--grid", type=int, default=200, help="curve points for `eval`")
    parser.add_argument("--format", choices=FORMATS, help="output format (default depends on command)")
    parser.add_argument("--out", help="write output here instead of stdout")
    parser.add_argument("--percentiles", help="comma-separated levels for `reliab`")
    parser.add_argument("--table", help="reference CSV for `audit` (default: bundled published_comparison.csv)")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    try:
        level = get_log_level()
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code
    logging.basicConfig(
        level=level,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    log_settings()

    try:
        config = RunConfig(
            command=args.command,
            input_path=args.data,
            models=tuple(args.model),
            fixes=parse_fix(args.fix),
            params=args.params,
            output_format=args.format or DEFAULT_FORMATS[args.command],
            out=args.out,
            seed=args.seed,
            starts=args.starts,
            grid=args.grid,
            n=args.n,
            percentiles=parse_percentiles(args.percentiles),
            table=args.table,
        )
        payload, code = run(config)
        text = emit(payload, config)
    except GemoError as e:
        logger.debug("command failed", exc_info=True)
        print(f"error: {e}", file=sys.stderr)
        return exit_code_for(e)

    if not config.out:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
