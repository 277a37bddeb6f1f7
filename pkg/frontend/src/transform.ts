/** Screen <-> image coordinate mapping with zoom and pan. */

export interface Point {
  x: number;
  y: number;
}

export const MIN_ZOOM = 0.5;
export const MAX_ZOOM = 8;

export class ViewTransform {
  constructor(
    public zoom: number = 1,
    public panX: number = 0,
    public panY: number = 0,
  ) {}

  imageToScreen(p: Point): Point {
    return { x: p.x * this.zoom + this.panX, y: p.y * this.zoom + this.panY };
  }

  screenToImage(p: Point): Point {
    return { x: (p.x - this.panX) / this.zoom, y: (p.y - this.panY) / this.zoom };
  }

  /** Zoom by `factor`, keeping the given screen point fixed. */
  zoomAt(screen: Point, factor: number): void {
    const next = Math.min(MAX_ZOOM, Math.max(MIN_ZOOM, this.zoom * factor));
    const applied = next / this.zoom;
    this.panX = screen.x - (screen.x - this.panX) * applied;
    this.panY = screen.y - (screen.y - this.panY) * applied;
    this.zoom = next;
  }

  panBy(dx: number, dy: number): void {
    this.panX += dx;
    this.panY += dy;
  }

  reset(): void {
    this.zoom = 1;
    this.panX = 0;
    this.panY = 0;
  }
}
