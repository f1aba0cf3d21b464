// Binary mesh payload decoding and hashing.
//
// Layout (little-endian): magic "D48M", u32 version, u32 generation,
// u32 vertex count, u32 triangle count, then f32 positions (3 per vertex),
// i32 per-vertex chart labels, u32 triangle indices.

export interface MeshPayload {
  version: number;
  generation: number;
  positions: Float32Array;
  labels: Int32Array;
  indices: Uint32Array;
  vertexCount: number;
  faceCount: number;
}

const MAGIC = 0x4d383444; // "D48M" read as little-endian u32

export function decodeMeshPayload(buf: ArrayBuffer): MeshPayload {
  const view = new DataView(buf);
  if (buf.byteLength < 20 || view.getUint32(0, true) !== MAGIC) {
    throw new Error("not a mesh payload");
  }
  const version = view.getUint32(4, true);
  const generation = view.getUint32(8, true);
  const vertexCount = view.getUint32(12, true);
  const faceCount = view.getUint32(16, true);
  let off = 20;
  const positions = new Float32Array(buf.slice(off, off + 12 * vertexCount));
  off += 12 * vertexCount;
  const labels = new Int32Array(buf.slice(off, off + 4 * vertexCount));
  off += 4 * vertexCount;
  const indices = new Uint32Array(buf.slice(off, off + 12 * faceCount));
  if (off + 12 * faceCount > buf.byteLength) throw new Error("truncated mesh payload");
  return { version, generation, positions, labels, indices, vertexCount, faceCount };
}

/** FNV-1a 64-bit over the raw payload bytes, as 16 hex digits. */
export function meshHash(buf: ArrayBuffer): string {
  const bytes = new Uint8Array(buf);
  let h = 0xcbf29ce484222325n;
  const prime = 0x100000001b3n;
  const mask = 0xffffffffffffffffn;
  for (let i = 0; i < bytes.length; i++) {
    h ^= BigInt(bytes[i]);
    h = (h * prime) & mask;
  }
  return h.toString(16).padStart(16, "0");
}
