"""Command line entry point: ``teacher-service <config.json>``.

Port and device from the config file can be overridden with the
TEACHER_SERVICE_PORT and TEACHER_SERVICE_DEVICE environment variables.
"""

from __future__ import annotations

import argparse
from typing import Optional, Sequence

import uvicorn

from .app import create_app
from .config import load_config


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        description="HTTP relevance-scoring service")
    parser.add_argument("config", help="path to a JSON config file")
    parser.add_argument("--host", default="127.0.0.1")
    args = parser.parse_args(argv)
    config = load_config(args.config)
    app = create_app(config)
    uvicorn.run(app, host=args.host, port=config.port, log_level="warning")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
