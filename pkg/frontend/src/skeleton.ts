/** Canvas drawing for the frame image, the partial skeleton overlay, and
 * the click markers. */

import type { Skeleton } from "./api.js";
import type { Point, ViewTransform } from "./transform.js";

const JOINT_RADIUS = 4;
const COLORS = { joint: "#ffcf40", edge: "#4fc3f7", label: "#ffffff" };

export function drawScene(
  ctx: CanvasRenderingContext2D,
  image: CanvasImageSource | null,
  clicks: Point[],
  skeleton: Skeleton,
  view: ViewTransform,
): void {
  ctx.save();
  ctx.fillStyle = "#181818";
  ctx.fillRect(0, 0, ctx.canvas.width, ctx.canvas.height);
  ctx.translate(view.panX, view.panY);
  ctx.scale(view.zoom, view.zoom);
  if (image) {
    ctx.imageSmoothingEnabled = view.zoom < 2;
    ctx.drawImage(image, 0, 0);
  }

  ctx.lineWidth = 2 / view.zoom;
  ctx.strokeStyle = COLORS.edge;
  for (const [a, b] of skeleton.edges) {
    const pa = clicks[a];
    const pb = clicks[b];
    if (pa && pb) {
      ctx.beginPath();
      ctx.moveTo(pa.x, pa.y);
      ctx.lineTo(pb.x, pb.y);
      ctx.stroke();
    }
  }

  ctx.fillStyle = COLORS.joint;
  for (const p of clicks) {
    ctx.beginPath();
    ctx.arc(p.x, p.y, JOINT_RADIUS / view.zoom, 0, 2 * Math.PI);
    ctx.fill();
  }
  const last = clicks[clicks.length - 1];
  if (last) {
    ctx.strokeStyle = COLORS.label;
    ctx.beginPath();
    ctx.arc(last.x, last.y, (JOINT_RADIUS + 3) / view.zoom, 0, 2 * Math.PI);
    ctx.stroke();
  }
  ctx.restore();
}
