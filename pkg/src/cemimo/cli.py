"""Command-line entry point: ``cemimo {sweep,ccdf,oracle}``.

Errors are reported as one JSON object on stderr and a nonzero exit code.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace

from .config import ExperimentConfig
from .errors import CemimoError, ConfigurationError

EXIT_ERROR = 1
EXIT_CHECK_FAILED = 2


def _u64(text: str) -> int:
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return v


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cemimo", description="CE vs. ZF massive-MIMO downlink simulator")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    for name, helptext in (("sweep", "full power sweep, all figures"), ("ccdf", "PAPR CCDFs only")):
        sp = sub.add_parser(name, help=helptext)
        sp.add_argument("--config", help="JSON experiment config (defaults if omitted)")
        sp.add_argument("--out", default="results", help="output directory (default: results)")
        sp.add_argument("--seed", type=_u64, help="override master_seed")
        sp.add_argument("--threads", type=_positive, default=1, help="worker processes for trials")
        sp.add_argument("--no-plot", action="store_true", help="skip PNG rendering")

    op = sub.add_parser("oracle", help="small-instance cross-checks of optimizer, gradient and detector")
    op.add_argument("--quick", action="store_true", help="fewer instances")
    op.add_argument("--out", help="also write the JSON report here")
    return p


def _load_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    return cfg


def _cmd_sweep(args) -> int:
    from .harness import emit, run_sweep

    cfg = _load_config(args)
    out = run_sweep(cfg, workers=args.threads)
    files = emit(out, args.out)
    if not args.no_plot:
        from .plotting import render_all

        files += render_all(out, args.out)
    for f in files:
        print(f)
    return 0


def _cmd_ccdf(args) -> int:
    from .harness import emit_ccdf, run_sweep

    cfg = _load_config(args)
    # PAPR does not depend on the Tx power, so a single sweep point suffices.
    cfg = replace(cfg, tx_power_sweep_db=(cfg.tx_power_sweep_db[0],))
    out = run_sweep(cfg, workers=args.threads)
    files = emit_ccdf(out, args.out)
    if not args.no_plot:
        from .plotting import render_ccdf_only

        files += render_ccdf_only(out, args.out)
    for f in files:
        print(f)
    return 0


def _cmd_oracle(args) -> int:
    from .oracles import run_all

    report = run_all(quick=args.quick)
    text = json.dumps(report, indent=2)
    print(text)
    if args.out:
        try:
            with open(args.out, "w") as fh:
                fh.write(text + "\n")
        except OSError as exc:
            raise CemimoError(f"cannot write {args.out}: {exc}") from exc
    return 0 if all(r["passed"] for r in report) else EXIT_CHECK_FAILED


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handlers = {"sweep": _cmd_sweep, "ccdf": _cmd_ccdf, "oracle": _cmd_oracle}
    try:
        return handlers[args.command](args)
    except CemimoError as exc:
        print(json.dumps(exc.to_dict()), file=sys.stderr)
        return EXIT_ERROR
    except OSError as exc:
        err = ConfigurationError(f"{exc.strerror}: {exc.filename}", field="config")
        print(json.dumps(err.to_dict()), file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
