import { describe, expect, it } from "vitest";

import { decodeMeshPayload, meshHash } from "../src/payload.js";

function buildPayload(generation: number): ArrayBuffer {
  // one triangle, labels [1, 1, 0]
  const nv = 3;
  const nf = 1;
  const buf = new ArrayBuffer(20 + 12 * nv + 4 * nv + 12 * nf);
  const view = new DataView(buf);
  view.setUint32(0, 0x4d383444, true); // D48M
  view.setUint32(4, 1, true);
  view.setUint32(8, generation, true);
  view.setUint32(12, nv, true);
  view.setUint32(16, nf, true);
  const pos = new Float32Array(buf, 20, 9);
  pos.set([0, 0, 0, 1, 0, 0, 0, 1, 0]);
  new Int32Array(buf, 20 + 36, 3).set([1, 1, 0]);
  new Uint32Array(buf, 20 + 36 + 12, 3).set([0, 1, 2]);
  return buf;
}

describe("mesh payload", () => {
  it("decodes header and arrays", () => {
    const mesh = decodeMeshPayload(buildPayload(7));
    expect(mesh.version).toBe(1);
    expect(mesh.generation).toBe(7);
    expect(mesh.vertexCount).toBe(3);
    expect(mesh.faceCount).toBe(1);
    expect(Array.from(mesh.indices)).toEqual([0, 1, 2]);
    expect(mesh.positions[3]).toBe(1);
    expect(Array.from(mesh.labels)).toEqual([1, 1, 0]);
  });

  it("rejects foreign data", () => {
    expect(() => decodeMeshPayload(new ArrayBuffer(8))).toThrow();
    const bad = buildPayload(1).slice(0, 30);
    expect(() => decodeMeshPayload(bad)).toThrow();
  });

  it("hashes are stable and sensitive", () => {
    const a = buildPayload(3);
    const b = buildPayload(3);
    const c = buildPayload(4);
    expect(meshHash(a)).toBe(meshHash(b));
    expect(meshHash(a)).not.toBe(meshHash(c));
    expect(meshHash(a)).toMatch(/^[0-9a-f]{16}$/);
  });
});
