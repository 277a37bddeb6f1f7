"""Command-line entry point.

  groundwork <stage> --workspace <dir> [--video <id>] [--config <file>]
  groundwork metrics|stats --workspace <dir> [--video <id>] [--out <file>]
  groundwork serve --workspace <dir> --frames <dir> --port <n>

Exit codes: 0 success, 1 validation error, 2 missing stage dependency.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from groundwork.server import serve_annotation_api
from groundwork.stages import STAGES, PendingAnnotationsError, run_stage
from groundwork.workspace import (
    MissingDependencyError,
    PipelineConfig,
    WorkspaceError,
    list_videos,
)

log = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="groundwork",
        description="Turn noisy multi-model pose detections into clean dancer "
        "keypoint sequences and evaluation metrics.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    for stage in STAGES:
        p = sub.add_parser(stage, help=f"run the {stage} stage")
        p.add_argument("--workspace", required=True, type=Path)
        p.add_argument("--video", help="video id (default: every video in the workspace)")
        p.add_argument("--config", type=Path, help="pipeline config JSON")
        if stage in ("metrics", "stats"):
            p.add_argument("--out", type=Path, help="report path (per video)")

    serve = sub.add_parser("serve", help="serve the annotation API")
    serve.add_argument("--workspace", required=True, type=Path)
    serve.add_argument("--frames", required=True, type=Path, help="extracted frame images")
    serve.add_argument("--port", required=True, type=int)
    serve.add_argument("--host", default="127.0.0.1")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )

    if args.command == "serve":
        try:
            serve_annotation_api(args.workspace, args.frames, args.port)
        except OSError as e:
            log.error("cannot serve: %s", e)
            return 1
        except KeyboardInterrupt:
            pass
        return 0

    try:
        cfg = PipelineConfig.from_file(args.config) if args.config else PipelineConfig()
        videos = [args.video] if args.video else list_videos(args.workspace)
        for video_id in videos:
            run_stage(args.workspace, video_id, args.command, cfg,
                      out=getattr(args, "out", None))
            log.info("%s: %s done", video_id, args.command)
    except MissingDependencyError as e:
        log.error("%s", e)
        return 2
    except (WorkspaceError, PendingAnnotationsError, ValueError, OSError) as e:
        log.error("%s", e)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
