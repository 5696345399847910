import argparse
import sys

from .serve import AdapterConfig, serve


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="scorer-adapter",
        description="Serve a patch-scoring model over the PSRQ/PSRS stdio protocol.",
    )
    parser.add_argument("--model", default="red-channel",
                        help="builtin name or module:attr (default: red-channel)")
    parser.add_argument("--device", default="cpu", help="device hint for model factories")
    parser.add_argument("--patch-size", type=int, default=None,
                        help="reject requests that are not this size (default: accept any)")
    args = parser.parse_args(argv)
    config = AdapterConfig(model=args.model, device=args.device, patch_size=args.patch_size)
    return serve(config)


if __name__ == "__main__":
    sys.exit(main())
