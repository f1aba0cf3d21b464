// Minimal WebGL mesh viewer: flat shading, chart-tinted faces, orbit camera.

import type { MeshPayload } from "./payload.js";
import { OrbitCamera } from "./camera.js";

const VS = `
attribute vec3 aPos;
attribute vec3 aNormal;
attribute vec3 aColor;
uniform mat4 uViewProj;
varying vec3 vNormal;
varying vec3 vColor;
void main() {
  vNormal = aNormal;
  vColor = aColor;
  gl_Position = uViewProj * vec4(aPos, 1.0);
}`;

const FS = `
precision mediump float;
varying vec3 vNormal;
varying vec3 vColor;
uniform vec3 uLight;
void main() {
  float d = max(dot(normalize(vNormal), normalize(uLight)), 0.0);
  vec3 c = vColor * (0.35 + 0.65 * d);
  gl_FragColor = vec4(c, 1.0);
}`;

const PALETTE: [number, number, number][] = [
  [0.75, 0.78, 0.82], [0.84, 0.63, 0.46], [0.55, 0.71, 0.58],
  [0.52, 0.62, 0.80], [0.80, 0.72, 0.48], [0.72, 0.55, 0.72],
  [0.49, 0.74, 0.75], [0.78, 0.56, 0.56],
];

export class Viewer {
  readonly camera = new OrbitCamera();
  private gl: WebGLRenderingContext;
  private program: WebGLProgram;
  private buffers: { pos: WebGLBuffer; nrm: WebGLBuffer; col: WebGLBuffer } | null = null;
  private count = 0;

  constructor(private canvas: HTMLCanvasElement) {
    const gl = canvas.getContext("webgl");
    if (!gl) throw new Error("WebGL unavailable");
    this.gl = gl;
    this.program = this.makeProgram(VS, FS);
    gl.enable(gl.DEPTH_TEST);
    gl.clearColor(0.10, 0.11, 0.13, 1.0);
  }

  private makeProgram(vsSrc: string, fsSrc: string): WebGLProgram {
    const gl = this.gl;
    const compile = (type: number, src: string) => {
      const sh = gl.createShader(type)!;
      gl.shaderSource(sh, src);
      gl.compileShader(sh);
      if (!gl.getShaderParameter(sh, gl.COMPILE_STATUS)) {
        throw new Error(gl.getShaderInfoLog(sh) ?? "shader error");
      }
      return sh;
    };
    const prog = gl.createProgram()!;
    gl.attachShader(prog, compile(gl.VERTEX_SHADER, vsSrc));
    gl.attachShader(prog, compile(gl.FRAGMENT_SHADER, fsSrc));
    gl.linkProgram(prog);
    if (!gl.getProgramParameter(prog, gl.LINK_STATUS)) {
      throw new Error(gl.getProgramInfoLog(prog) ?? "link error");
    }
    return prog;
  }

  /** De-index the mesh so every triangle gets a flat normal and chart tint. */
  setMesh(mesh: MeshPayload): void {
    const n = mesh.faceCount * 3;
    const pos = new Float32Array(n * 3);
    const nrm = new Float32Array(n * 3);
    const col = new Float32Array(n * 3);
    const P = mesh.positions;
    for (let f = 0; f < mesh.faceCount; f++) {
      const ia = mesh.indices[f * 3];
      const ib = mesh.indices[f * 3 + 1];
      const ic = mesh.indices[f * 3 + 2];
      const ax = P[ia * 3], ay = P[ia * 3 + 1], az = P[ia * 3 + 2];
      const bx = P[ib * 3], by = P[ib * 3 + 1], bz = P[ib * 3 + 2];
      const cx = P[ic * 3], cy = P[ic * 3 + 1], cz = P[ic * 3 + 2];
      let nx = (by - ay) * (cz - az) - (bz - az) * (cy - ay);
      let ny = (bz - az) * (cx - ax) - (bx - ax) * (cz - az);
      let nz = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax);
      const len = Math.hypot(nx, ny, nz) || 1;
      nx /= len; ny /= len; nz /= len;
      const label = Math.max(mesh.labels[ia], mesh.labels[ib], mesh.labels[ic]);
      const tint = PALETTE[label % PALETTE.length];
      for (const [k, idx] of [ia, ib, ic].entries()) {
        const o = (f * 3 + k) * 3;
        pos[o] = P[idx * 3]; pos[o + 1] = P[idx * 3 + 1]; pos[o + 2] = P[idx * 3 + 2];
        nrm[o] = nx; nrm[o + 1] = ny; nrm[o + 2] = nz;
        col[o] = tint[0]; col[o + 1] = tint[1]; col[o + 2] = tint[2];
      }
    }
    const gl = this.gl;
    if (!this.buffers) {
      this.buffers = { pos: gl.createBuffer()!, nrm: gl.createBuffer()!, col: gl.createBuffer()! };
    }
    for (const [buf, data] of [[this.buffers.pos, pos], [this.buffers.nrm, nrm],
                               [this.buffers.col, col]] as [WebGLBuffer, Float32Array][]) {
      gl.bindBuffer(gl.ARRAY_BUFFER, buf);
      gl.bufferData(gl.ARRAY_BUFFER, data, gl.STATIC_DRAW);
    }
    this.count = n;
  }

  draw(): void {
    const gl = this.gl;
    const w = this.canvas.clientWidth || this.canvas.width;
    const h = this.canvas.clientHeight || this.canvas.height;
    if (this.canvas.width !== w || this.canvas.height !== h) {
      this.canvas.width = w;
      this.canvas.height = h;
    }
    gl.viewport(0, 0, w, h);
    gl.clear(gl.COLOR_BUFFER_BIT | gl.DEPTH_BUFFER_BIT);
    if (!this.buffers || this.count === 0) return;
    gl.useProgram(this.program);
    const vp = this.camera.viewProj(w / h);
    gl.uniformMatrix4fv(gl.getUniformLocation(this.program, "uViewProj"), false, vp);
    gl.uniform3f(gl.getUniformLocation(this.program, "uLight"), 0.4, 0.25, 0.88);
    const bind = (name: string, buf: WebGLBuffer) => {
      const loc = gl.getAttribLocation(this.program, name);
      gl.bindBuffer(gl.ARRAY_BUFFER, buf);
      gl.enableVertexAttribArray(loc);
      gl.vertexAttribPointer(loc, 3, gl.FLOAT, false, 0, 0);
    };
    bind("aPos", this.buffers.pos);
    bind("aNormal", this.buffers.nrm);
    bind("aColor", this.buffers.col);
    gl.drawArrays(gl.TRIANGLES, 0, this.count);
  }
}
