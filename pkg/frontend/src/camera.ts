// Orbit camera with ray generation for surface picking.

import type { Vec3 } from "./commands.js";

const DEG = Math.PI / 180;

export class OrbitCamera {
  target: Vec3 = [0, 0, 0];
  distance = 4;
  yaw = 35 * DEG;
  pitch = 20 * DEG;
  fovY = 45 * DEG;

  eye(): Vec3 {
    const cp = Math.cos(this.pitch);
    return [
      this.target[0] + this.distance * cp * Math.cos(this.yaw),
      this.target[1] + this.distance * cp * Math.sin(this.yaw),
      this.target[2] + this.distance * Math.sin(this.pitch),
    ];
  }

  /** forward/right/up basis (+z is world up). */
  basis(): { f: Vec3; r: Vec3; u: Vec3 } {
    const e = this.eye();
    const f = norm3(sub3(this.target, e));
    const r = norm3(cross3(f, [0, 0, 1]));
    const u = cross3(r, f);
    return { f, r, u };
  }

  orbit(dx: number, dy: number): void {
    this.yaw -= dx * 0.008;
    this.pitch = Math.min(Math.max(this.pitch + dy * 0.008, -1.45), 1.45);
  }

  zoom(factor: number): void {
    this.distance = Math.min(Math.max(this.distance * factor, 0.3), 40);
  }

  /** World-space ray through a canvas pixel. */
  screenRay(x: number, y: number, width: number, height: number): { origin: Vec3; dir: Vec3 } {
    const { f, r, u } = this.basis();
    const aspect = width / height;
    const ty = Math.tan(this.fovY / 2);
    const ndcX = (2 * x / width - 1) * ty * aspect;
    const ndcY = (1 - 2 * y / height) * ty;
    const dir = norm3(add3(add3(f, scale3(r, ndcX)), scale3(u, ndcY)));
    return { origin: this.eye(), dir };
  }

  /** Column-major view-projection matrix for rendering. */
  viewProj(aspect: number): Float32Array {
    const { f, r, u } = this.basis();
    const e = this.eye();
    // look-at view matrix
    const view = new Float32Array([
      r[0], u[0], -f[0], 0,
      r[1], u[1], -f[1], 0,
      r[2], u[2], -f[2], 0,
      -dot3(r, e), -dot3(u, e), dot3(f, e), 1,
    ]);
    const near = 0.01, far = 100;
    const t = 1 / Math.tan(this.fovY / 2);
    const proj = new Float32Array([
      t / aspect, 0, 0, 0,
      0, t, 0, 0,
      0, 0, (far + near) / (near - far), -1,
      0, 0, (2 * far * near) / (near - far), 0,
    ]);
    return mul4(proj, view);
  }
}

export function sub3(a: Vec3, b: Vec3): Vec3 {
  return [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
}
export function add3(a: Vec3, b: Vec3): Vec3 {
  return [a[0] + b[0], a[1] + b[1], a[2] + b[2]];
}
export function scale3(a: Vec3, s: number): Vec3 {
  return [a[0] * s, a[1] * s, a[2] * s];
}
export function dot3(a: Vec3, b: Vec3): number {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}
export function cross3(a: Vec3, b: Vec3): Vec3 {
  return [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]];
}
export function norm3(a: Vec3): Vec3 {
  const n = Math.hypot(a[0], a[1], a[2]) || 1;
  return [a[0] / n, a[1] / n, a[2] / n];
}

function mul4(a: Float32Array, b: Float32Array): Float32Array {
  const out = new Float32Array(16);
  for (let c = 0; c < 4; c++) {
    for (let r = 0; r < 4; r++) {
      let s = 0;
      for (let k = 0; k < 4; k++) s += a[k * 4 + r] * b[c * 4 + k];
      out[c * 4 + r] = s;
    }
  }
  return out;
}
