"""Launcher: python -m embed_service [--model ID] [--host H] [--port P]."""

import argparse
import logging

import uvicorn

from .app import create_app
from .config import DEFAULT_MODEL, ServiceConfig


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="embed-service",
        description="Serve L2-normalized sentence embeddings over HTTP.")
    parser.add_argument("--model",
                        help=f"'hash-trigram-<dim>' or a sentence-transformers "
                             f"checkpoint name (default {DEFAULT_MODEL}, or "
                             f"EMBED_SERVICE_MODEL)")
    parser.add_argument("--host", help="bind address (default 127.0.0.1)")
    parser.add_argument("--port", type=int, help="bind port (default 8765)")
    parser.add_argument("--max-batch", type=int,
                        help="max texts per request (default 256)")
    args = parser.parse_args(argv)

    logging.basicConfig(level=logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    config = ServiceConfig.from_env(model=args.model, host=args.host,
                                    port=args.port, max_batch=args.max_batch)
    uvicorn.run(create_app(config), host=config.host, port=config.port,
                log_level="info")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
