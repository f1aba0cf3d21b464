// Client-side mirror of the planar tesel grid.
//
// The kernel owns the real complex; the mirror tracks rows/cols/vertex
// positions so the editor can draw the grid and address vertices and cells
// by the same row-major ids the kernel uses.  Subdivision propagates across
// the whole row/column, exactly like the kernel.

import type { Point2 } from "./sketch.js";
import type { TeselEdit } from "./commands.js";

export class TeselMirror {
  rows = 1;
  cols = 1;
  verts: Point2[] = [];
  kinds: ("cube" | "torus")[] = ["cube"];

  static fromBBox(lo: Point2, hi: Point2): TeselMirror {
    const m = new TeselMirror();
    m.verts = [
      { x: lo.x, y: lo.y }, { x: hi.x, y: lo.y },
      { x: lo.x, y: hi.y }, { x: hi.x, y: hi.y },
    ];
    return m;
  }

  vertexId(r: number, c: number): number {
    return r * (this.cols + 1) + c;
  }

  cellCorners(cell: number): number[] {
    const r = Math.floor(cell / this.cols);
    const c = cell % this.cols;
    return [this.vertexId(r, c), this.vertexId(r, c + 1),
            this.vertexId(r + 1, c + 1), this.vertexId(r + 1, c)];
  }

  get cellCount(): number {
    return this.rows * this.cols;
  }

  apply(edit: TeselEdit): void {
    if (edit[0] === "move") {
      this.verts[edit[1]] = { x: edit[2], y: edit[3] };
    } else if (edit[0] === "kind") {
      this.kinds[edit[1]] = edit[2];
    } else {
      this.subdivide(edit[1], edit[2]);
    }
  }

  subdivide(cell: number, axis: "u" | "v"): void {
    const r = Math.floor(cell / this.cols);
    const c = cell % this.cols;
    const grid: Point2[][] = [];
    for (let rr = 0; rr <= this.rows; rr++) {
      grid.push(this.verts.slice(rr * (this.cols + 1), (rr + 1) * (this.cols + 1)));
    }
    if (axis === "u") {
      for (const row of grid) {
        const mid = { x: (row[c].x + row[c + 1].x) / 2, y: (row[c].y + row[c + 1].y) / 2 };
        row.splice(c + 1, 0, mid);
      }
      const kinds: ("cube" | "torus")[] = [];
      for (let rr = 0; rr < this.rows; rr++) {
        const row = this.kinds.slice(rr * this.cols, (rr + 1) * this.cols);
        kinds.push(...row.slice(0, c + 1), ...row.slice(c));
      }
      this.kinds = kinds;
      this.cols += 1;
    } else {
      const mid = grid[r].map((p, i) => ({
        x: (p.x + grid[r + 1][i].x) / 2,
        y: (p.y + grid[r + 1][i].y) / 2,
      }));
      grid.splice(r + 1, 0, mid);
      const kinds = this.kinds.slice(0, (r + 1) * this.cols);
      kinds.push(...this.kinds.slice(r * this.cols));
      this.kinds = kinds;
      this.rows += 1;
    }
    this.verts = grid.flat();
  }

  nearestVertex(p: Point2, maxDist: number): number | null {
    let best = -1;
    let bestD = maxDist;
    this.verts.forEach((v, i) => {
      const d = Math.hypot(v.x - p.x, v.y - p.y);
      if (d < bestD) {
        bestD = d;
        best = i;
      }
    });
    return best >= 0 ? best : null;
  }

  cellAt(p: Point2): number | null {
    for (let cell = 0; cell < this.cellCount; cell++) {
      const [a, b, c, d] = this.cellCorners(cell).map((i) => this.verts[i]);
      if (pointInQuad(p, a, b, c, d)) return cell;
    }
    return null;
  }
}

function pointInQuad(p: Point2, ...q: Point2[]): boolean {
  let sign = 0;
  for (let i = 0; i < 4; i++) {
    const a = q[i];
    const b = q[(i + 1) % 4];
    const cr = (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
    if (cr === 0) continue;
    const s = Math.sign(cr);
    if (sign === 0) sign = s;
    else if (s !== sign) return false;
  }
  return true;
}
