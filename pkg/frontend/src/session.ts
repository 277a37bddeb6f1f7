/** Annotation session state: the pending-frame queue and the in-progress
 * click list for the current frame. Submissions contain exactly the points
 * the annotator clicked, in joint order. */

import type { Point } from "./transform.js";

export const NUM_JOINTS = 17;

export interface ImageSize {
  width: number;
  height: number;
}

export class AnnotationSession {
  readonly clicks: Point[] = [];
  completedCount = 0;
  private queue: number[];

  constructor(
    public readonly videoId: string,
    pendingFrames: number[],
    public readonly jointNames: string[],
  ) {
    this.queue = [...pendingFrames];
  }

  get currentFrame(): number | null {
    return this.queue.length ? (this.queue[0] as number) : null;
  }

  get pendingCount(): number {
    return this.queue.length;
  }

  get done(): boolean {
    return this.queue.length === 0;
  }

  /** Joint the next click will label, or null once all 17 are placed. */
  get nextJointName(): string | null {
    return this.clicks.length < NUM_JOINTS ? (this.jointNames[this.clicks.length] ?? null) : null;
  }

  /** Append an image-space click for the next joint. Returns false (and
   * records nothing) when the frame is already fully clicked or the point
   * lies outside the image. */
  recordClick(imagePoint: Point, imageSize?: ImageSize): boolean {
    if (this.done || this.clicks.length >= NUM_JOINTS) {
      return false;
    }
    if (
      imageSize &&
      (imagePoint.x < 0 ||
        imagePoint.y < 0 ||
        imagePoint.x > imageSize.width ||
        imagePoint.y > imageSize.height)
    ) {
      return false;
    }
    this.clicks.push({ x: imagePoint.x, y: imagePoint.y });
    return true;
  }

  undo(): boolean {
    return this.clicks.pop() !== undefined;
  }

  get canSubmit(): boolean {
    return !this.done && this.clicks.length === NUM_JOINTS;
  }

  /** The payload for the annotation endpoint: exactly the clicked points. */
  submission(): [number, number][] {
    if (!this.canSubmit) {
      throw new Error(`need exactly ${NUM_JOINTS} points, have ${this.clicks.length}`);
    }
    return this.clicks.map((p) => [p.x, p.y]);
  }

  /** Advance past the current frame after the server acknowledged it. */
  markSubmitted(): void {
    this.queue.shift();
    this.completedCount += 1;
    this.clicks.length = 0;
  }
}

/** Queue the pending entries for one video, oldest frame first. Entries
 * already done are dropped even if the server returned them. */
export function queueFromManifest(
  entries: { frame: number; status: string }[],
): number[] {
  return entries
    .filter((e) => e.status === "pending")
    .map((e) => e.frame)
    .sort((a, b) => a - b);
}
