/** Browser entry point: load the pending queue for a video, show each frame
 * with a +-2 neighbouring-frame strip (to disambiguate the active dancer),
 * collect 17 clicks in joint order with undo/zoom/pan, and submit. */

import { ApiClient, ApiError, Skeleton } from "./api.js";
import { AnnotationSession, queueFromManifest } from "./session.js";
import { drawScene } from "./skeleton.js";
import { ViewTransform } from "./transform.js";

const params = new URLSearchParams(location.search);
const api = new ApiClient(params.get("api") ?? "http://127.0.0.1:8777");

const el = {
  video: document.getElementById("video") as HTMLInputElement,
  load: document.getElementById("load") as HTMLButtonElement,
  canvas: document.getElementById("canvas") as HTMLCanvasElement,
  prompt: document.getElementById("prompt") as HTMLElement,
  status: document.getElementById("status") as HTMLElement,
  undo: document.getElementById("undo") as HTMLButtonElement,
  submit: document.getElementById("submit") as HTMLButtonElement,
  strip: document.getElementById("strip") as HTMLElement,
};
const ctx = el.canvas.getContext("2d")!;

let skeleton: Skeleton = { joints: [], edges: [] };
let session: AnnotationSession | null = null;
let view = new ViewTransform();
let image: HTMLImageElement | null = null;
let inFlight = false;

function setStatus(text: string, isError = false): void {
  el.status.textContent = text;
  el.status.className = isError ? "error" : "";
}

function redraw(): void {
  drawScene(ctx, image, session ? session.clicks : [], skeleton, view);
  if (!session || session.done) {
    el.prompt.textContent = session ? "all frames done" : "";
    el.submit.disabled = true;
    el.undo.disabled = true;
    return;
  }
  const joint = session.nextJointName;
  el.prompt.textContent = joint
    ? `frame ${session.currentFrame}: click ${joint} (${session.clicks.length + 1}/17)`
    : `frame ${session.currentFrame}: review and submit`;
  el.submit.disabled = !session.canSubmit || inFlight;
  el.undo.disabled = session.clicks.length === 0;
}

function loadFrameImage(): void {
  image = null;
  el.strip.replaceChildren();
  if (!session || session.done) {
    redraw();
    setStatus(session ? `done: ${session.completedCount} frames submitted` : "");
    return;
  }
  const frame = session.currentFrame!;
  const img = new Image();
  img.onload = () => {
    image = img;
    view.reset();
    redraw();
  };
  img.onerror = () => setStatus(`cannot load image for frame ${frame}`, true);
  img.src = api.frameUrl(session.videoId, frame);

  for (const delta of [-2, -1, 0, 1, 2]) {
    const thumb = new Image();
    thumb.className = delta === 0 ? "thumb current" : "thumb";
    thumb.title = `frame ${frame + delta}`;
    thumb.src = api.frameUrl(session.videoId, frame + delta);
    thumb.onerror = () => thumb.remove();
    el.strip.appendChild(thumb);
  }
  setStatus(`${session.pendingCount} frame(s) pending`);
}

async function loadQueue(): Promise<void> {
  try {
    const [entries, fetchedSkeleton] = await Promise.all([
      api.manifest(el.video.value, "pending"),
      api.skeleton(),
    ]);
    skeleton = fetchedSkeleton;
    session = new AnnotationSession(el.video.value, queueFromManifest(entries), skeleton.joints);
    loadFrameImage();
  } catch (err) {
    setStatus(`${err instanceof Error ? err.message : err} - check the service and retry`, true);
  }
}

async function submit(): Promise<void> {
  if (!session || !session.canSubmit || inFlight) {
    return;
  }
  inFlight = true;
  redraw();
  try {
    await api.submit(session.videoId, session.currentFrame!, session.submission());
    session.markSubmitted();
    loadFrameImage();
  } catch (err) {
    // keep the clicks so the annotator can correct and retry
    const detail = err instanceof ApiError ? err.message : `network failure: ${err}`;
    setStatus(`submission rejected: ${detail}`, true);
  } finally {
    inFlight = false;
    redraw();
  }
}

el.canvas.addEventListener("mousedown", (event) => {
  if (!session || image === null) {
    return;
  }
  if (event.shiftKey || event.button === 1) {
    const move = (e: MouseEvent) => {
      view.panBy(e.movementX, e.movementY);
      redraw();
    };
    const up = () => {
      window.removeEventListener("mousemove", move);
      window.removeEventListener("mouseup", up);
    };
    window.addEventListener("mousemove", move);
    window.addEventListener("mouseup", up);
    return;
  }
  const rect = el.canvas.getBoundingClientRect();
  const screen = { x: event.clientX - rect.left, y: event.clientY - rect.top };
  const taken = session.recordClick(view.screenToImage(screen), {
    width: image.naturalWidth,
    height: image.naturalHeight,
  });
  if (!taken && !session.canSubmit) {
    setStatus("click ignored: outside the image", true);
  }
  redraw();
});

el.canvas.addEventListener("wheel", (event) => {
  event.preventDefault();
  const rect = el.canvas.getBoundingClientRect();
  view.zoomAt(
    { x: event.clientX - rect.left, y: event.clientY - rect.top },
    event.deltaY < 0 ? 1.25 : 0.8,
  );
  redraw();
});

el.undo.addEventListener("click", () => {
  session?.undo();
  redraw();
});
window.addEventListener("keydown", (event) => {
  if (event.key === "z" && !event.ctrlKey && !event.metaKey) {
    session?.undo();
    redraw();
  }
});
el.submit.addEventListener("click", () => void submit());
el.load.addEventListener("click", () => void loadQueue());

redraw();
