"""Bridge CLI: serve a model behind the wire protocol, or check an endpoint."""

from __future__ import annotations

import argparse
import sys

from .conformance import conformance_check
from .models import ModelSpec
from .service import build_app


def cmd_serve(args) -> int:
    import uvicorn

    spec = ModelSpec(
        model=args.model,
        checkpoint=args.checkpoint,
        resize=tuple(args.resize) if args.resize else None,
        output_range=(args.output_lo, args.output_hi),
    )
    app = build_app(spec, lpips_checkpoint=args.lpips_checkpoint)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def cmd_check(args) -> int:
    report = conformance_check(args.endpoint, timeout=args.timeout)
    print(f"\nconformance: {'PASS' if report.passed else 'FAIL'} ({report.endpoint})")
    return 0 if report.passed else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="iqa-bridge", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="run the scoring service")
    serve.add_argument("--model", default="builtin:sharpness",
                       help="builtin:sharpness | torchscript")
    serve.add_argument("--checkpoint", default=None, help="TorchScript checkpoint path")
    serve.add_argument("--lpips-checkpoint", default=None)
    serve.add_argument("--resize", type=int, nargs=2, default=None, metavar=("H", "W"))
    serve.add_argument("--output-lo", type=float, default=0.0)
    serve.add_argument("--output-hi", type=float, default=100.0)
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8787)
    serve.set_defaults(func=cmd_serve)

    check = sub.add_parser("check", help="run protocol conformance against an endpoint")
    check.add_argument("--endpoint", required=True)
    check.add_argument("--timeout", type=float, default=30.0)
    check.set_defaults(func=cmd_check)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
