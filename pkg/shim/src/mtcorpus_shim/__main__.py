"""Run the shim: `mtcorpus-shim --port 8763 --translator identity`."""

from __future__ import annotations

import argparse
import sys

from .config import ShimStartupError, config_from_env


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="mtcorpus-shim",
        description="Desk-scale /v1/transform service with deterministic backends",
    )
    parser.add_argument("--port", type=int)
    parser.add_argument("--embed-dim", dest="embed_dim", type=int)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--translator", choices=("identity", "tiny-mt"))
    parser.add_argument("--simplifier", help="'rule' or 'hf:<model>'")
    parser.add_argument("--scorer", help="'bigram' or 'hf:<model>'")
    args = parser.parse_args(argv)

    try:
        config = config_from_env(
            port=args.port,
            embed_dim=args.embed_dim,
            seed=args.seed,
            translator=args.translator,
            simplifier=args.simplifier,
            scorer=args.scorer,
        )
        from .app import create_app

        app = create_app(config)
    except ShimStartupError as e:
        print(f"refusing to start: {e}", file=sys.stderr)
        return 1

    import uvicorn

    uvicorn.run(app, host="127.0.0.1", port=config.port, log_level="warning")
    return 0


if __name__ == "__main__":
    sys.exit(main())
