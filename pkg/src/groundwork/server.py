"""HTTP service backing the annotation UI.

Endpoints:
  GET  /api/manifest?video=<id>[&status=pending|done]  -> manifest document
  GET  /api/frames/<video>/<frame>                     -> image bytes
  POST /api/annotations  {video_id, frame, keypoints: 17x[x, y]}
  GET  /api/skeleton                                   -> joint names + edges

All manifest mutations run under one lock and are persisted (atomic write,
fsync) before the response is sent; done entries are immutable. While the
service runs it holds a lock file per video so the CLI will not race it.
"""

from __future__ import annotations

import json
import logging
import os
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, urlparse

import numpy as np

from groundwork.model import COCO_JOINT_NAMES, COCO_SKELETON_EDGES, NUM_JOINTS
from groundwork.selection import LabelManifestEntry
from groundwork.workspace import (
    VideoWorkspace,
    atomic_write_text,
    load_manifest,
    manifest_entry_to_record,
    save_manifest,
    save_manual_annotation,
)

log = logging.getLogger(__name__)

IMAGE_SUFFIXES = (".jpg", ".jpeg", ".png")
IMAGE_TYPES = {".jpg": "image/jpeg", ".jpeg": "image/jpeg", ".png": "image/png"}


class AnnotationStore:
    """Single-writer manifest state for every video in the workspace."""

    def __init__(self, root: Path):
        self.root = Path(root)
        self._lock = threading.Lock()
        self._entries: dict[str, list[LabelManifestEntry]] = {}

    def _video_ws(self, video_id: str) -> VideoWorkspace:
        return VideoWorkspace(self.root, video_id)

    def _load(self, video_id: str) -> list[LabelManifestEntry]:
        if video_id not in self._entries:
            self._entries[video_id] = load_manifest(self._video_ws(video_id).manifest_path)
        return self._entries[video_id]

    def video_exists(self, video_id: str) -> bool:
        return (self.root / video_id).is_dir()

    def entries(self, video_id: str, status: str | None = None) -> list[dict]:
        with self._lock:
            entries = self._load(video_id)
            records = [
                manifest_entry_to_record(e)
                for e in sorted(entries, key=lambda e: e.frame)
                if status is None or e.status == status
            ]
        return records

    def submit(self, video_id: str, frame: int, pose: np.ndarray) -> None:
        """Mark a pending entry done; persisted before returning.

        Raises KeyError for unknown entries, PermissionError for done ones.
        """
        with self._lock:
            entries = self._load(video_id)
            index = next(
                (i for i, e in enumerate(entries) if e.frame == frame and e.video_id == video_id),
                None,
            )
            if index is None:
                raise KeyError(f"frame {frame} of video {video_id} is not in the manifest")
            if entries[index].status == "done":
                raise PermissionError(f"frame {frame} of video {video_id} is already done")
            updated = LabelManifestEntry(video_id, frame, entries[index].reason, "done", pose)
            ws = self._video_ws(video_id)
            save_manual_annotation(ws.dir, video_id, frame, updated.submitted_pose)
            new_entries = list(entries)
            new_entries[index] = updated
            save_manifest(ws.manifest_path, new_entries)
            self._entries[video_id] = new_entries


class _Handler(BaseHTTPRequestHandler):
    store: AnnotationStore
    frames_dir: Path

    def log_message(self, fmt, *args):  # route through logging, not stderr
        log.debug("%s %s", self.address_string(), fmt % args)

    def _send(self, code: int, payload, content_type="application/json") -> None:
        body = payload if isinstance(payload, bytes) else (json.dumps(payload) + "\n").encode()
        self.send_response(code)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
        self.end_headers()
        self.wfile.write(body)

    def _error(self, code: int, message: str) -> None:
        self._send(code, {"error": message})

    def do_OPTIONS(self):
        self._send(204, b"", content_type="text/plain")

    def do_GET(self):
        url = urlparse(self.path)
        parts = [p for p in url.path.split("/") if p]
        if url.path == "/api/skeleton":
            self._send(200, {"joints": COCO_JOINT_NAMES, "edges": [list(e) for e in COCO_SKELETON_EDGES]})
        elif url.path == "/api/manifest":
            query = parse_qs(url.query)
            video = query.get("video", [None])[0]
            status = query.get("status", [None])[0]
            if not video:
                return self._error(400, "missing 'video' query parameter")
            if not self.store.video_exists(video):
                return self._error(404, f"unknown video {video}")
            if status not in (None, "pending", "done"):
                return self._error(400, f"unknown status filter {status}")
            self._send(200, {"entries": self.store.entries(video, status)})
        elif len(parts) == 4 and parts[:2] == ["api", "frames"]:
            self._serve_frame(parts[2], parts[3])
        else:
            self._error(404, f"no such endpoint: {url.path}")

    def _serve_frame(self, video: str, frame: str) -> None:
        try:
            number = int(frame)
        except ValueError:
            return self._error(400, f"frame must be an integer, got {frame!r}")
        for name in (f"{number:06d}", str(number)):
            for suffix in IMAGE_SUFFIXES:
                path = self.frames_dir / video / f"{name}{suffix}"
                if path.exists():
                    return self._send(200, path.read_bytes(), IMAGE_TYPES[suffix])
        self._error(404, f"no image for video {video} frame {number}")

    def do_POST(self):
        if urlparse(self.path).path != "/api/annotations":
            return self._error(404, f"no such endpoint: {self.path}")
        try:
            length = int(self.headers.get("Content-Length", "0"))
            payload = json.loads(self.rfile.read(length))
            video_id = str(payload["video_id"])
            frame = int(payload["frame"])
            keypoints = np.asarray(payload["keypoints"], dtype=float)
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
            return self._error(422, f"malformed submission: {e}")
        if keypoints.shape != (NUM_JOINTS, 2) or not np.isfinite(keypoints).all():
            return self._error(422, f"keypoints must be a finite {NUM_JOINTS}x2 list")
        if not self.store.video_exists(video_id):
            return self._error(404, f"unknown video {video_id}")
        try:
            self.store.submit(video_id, frame, keypoints)
        except KeyError as e:
            return self._error(404, str(e))
        except PermissionError as e:
            return self._error(409, str(e))
        self._send(200, {"ok": True, "video_id": video_id, "frame": frame})


class AnnotationServer:
    """Owns the HTTP server plus the per-video manifest lock files."""

    def __init__(self, workspace: Path, frames_dir: Path, port: int, host: str = "127.0.0.1"):
        self.workspace = Path(workspace)
        self.frames_dir = Path(frames_dir)
        store = AnnotationStore(self.workspace)
        handler = type("Handler", (_Handler,), {"store": store, "frames_dir": self.frames_dir})
        self.httpd = ThreadingHTTPServer((host, port), handler)
        self._locked: list[Path] = []

    @property
    def port(self) -> int:
        return self.httpd.server_address[1]

    def _acquire_locks(self) -> None:
        for video_dir in sorted(self.workspace.iterdir()):
            if video_dir.is_dir():
                lock = video_dir / "manifest.lock"
                atomic_write_text(lock, f"{os.getpid()}\n")
                self._locked.append(lock)

    def _release_locks(self) -> None:
        for lock in self._locked:
            try:
                lock.unlink()
            except OSError:
                pass
        self._locked = []

    def serve_forever(self) -> None:
        self._acquire_locks()
        try:
            log.info("annotation service on port %d (workspace %s)", self.port, self.workspace)
            self.httpd.serve_forever()
        finally:
            self._release_locks()
            self.httpd.server_close()

    def start_background(self) -> threading.Thread:
        self._acquire_locks()
        thread = threading.Thread(target=self.httpd.serve_forever, daemon=True)
        thread.start()
        return thread

    def shutdown(self) -> None:
        self.httpd.shutdown()
        self.httpd.server_close()
        self._release_locks()


def serve_annotation_api(workspace: Path, frames_dir: Path, port: int) -> None:
    AnnotationServer(workspace, frames_dir, port).serve_forever()
