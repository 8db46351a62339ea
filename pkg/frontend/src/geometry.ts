export type Point = [number, number];
export type Bbox = [number, number, number, number]; // xmin, ymin, xmax, ymax

/** Even-odd-rule point-in-polygon test. */
export function pointInPolygon(pt: Point, polygon: Point[]): boolean {
  const [x, y] = pt;
  let inside = false;
  const n = polygon.length;
  for (let i = 0; i < n; i++) {
    const [x1, y1] = polygon[i];
    const [x2, y2] = polygon[(i + 1) % n];
    if (y1 > y !== y2 > y) {
      const xCross = x1 + ((y - y1) / (y2 - y1)) * (x2 - x1);
      if (x < xCross) inside = !inside;
    }
  }
  return inside;
}

/**
 * Resolve a lasso polygon (world coordinates) to the indices of the sites
 * inside it. Selections stay index-based on the wire; the server never sees
 * the polygon.
 */
export function lassoToIndices(sites: Point[], polygon: Point[]): number[] {
  if (polygon.length < 3) return [];
  const out: number[] = [];
  sites.forEach((site, i) => {
    if (pointInPolygon(site, polygon)) out.push(i);
  });
  return out;
}

/** Rectangle capture: corners in world coordinates, any orientation. */
export function rectToIndices(sites: Point[], corner1: Point, corner2: Point): number[] {
  const xlo = Math.min(corner1[0], corner2[0]);
  const xhi = Math.max(corner1[0], corner2[0]);
  const ylo = Math.min(corner1[1], corner2[1]);
  const yhi = Math.max(corner1[1], corner2[1]);
  const out: number[] = [];
  sites.forEach(([x, y], i) => {
    if (x >= xlo && x <= xhi && y >= ylo && y <= yhi) out.push(i);
  });
  return out;
}

export interface Transform {
  toScreen(p: Point): Point;
  toWorld(p: Point): Point;
  width: number;
  height: number;
}

/**
 * World (embedding bbox) to screen mapping that preserves aspect ratio and
 * flips the y axis (SVG y grows downward).
 */
export function makeTransform(bbox: Bbox, maxSize = 640, margin = 8): Transform {
  const [xmin, ymin, xmax, ymax] = bbox;
  const spanX = xmax - xmin;
  const spanY = ymax - ymin;
  const scale = (maxSize - 2 * margin) / Math.max(spanX, spanY);
  const width = spanX * scale + 2 * margin;
  const height = spanY * scale + 2 * margin;
  return {
    width,
    height,
    toScreen: ([x, y]) => [margin + (x - xmin) * scale, height - (margin + (y - ymin) * scale)],
    toWorld: ([sx, sy]) => [xmin + (sx - margin) / scale, ymin + (height - sy - margin) / scale],
  };
}
