import { describe, expect, it } from "vitest";

import type { Transport } from "../src/api.js";
import type { CommandJson, MutationReport, Vec3 } from "../src/commands.js";
import { OrbitCamera } from "../src/camera.js";
import { UiSession } from "../src/session.js";

/** In-memory transport: records commands, synthesizes payloads and picks. */
class FakeTransport implements Transport {
  posted: CommandJson[] = [];
  generation = 0;
  pickResponder: (origin: Vec3, dir: Vec3) => Vec3 | null = () => [1, 0, 0];
  delayed: Array<() => void> = [];
  hold = false;

  async createSession() {
    return { id: "t1", generation: 0 };
  }

  async postCommand(_id: string, cmd: CommandJson): Promise<MutationReport> {
    if (this.hold) {
      await new Promise<void>((resolve) => this.delayed.push(resolve));
    }
    this.posted.push(cmd);
    this.generation += 1;
    return { op: cmd.op, generation: this.generation, vertices: 0, faces: 0 };
  }

  async getMesh(): Promise<ArrayBuffer | null> {
    const buf = new ArrayBuffer(20);
    const view = new DataView(buf);
    view.setUint32(0, 0x4d383444, true);
    view.setUint32(4, 1, true);
    view.setUint32(8, this.generation, true);
    return buf;
  }

  async pick(_id: string, origin: Vec3, dir: Vec3): Promise<Vec3 | null> {
    return this.pickResponder(origin, dir);
  }

  async getLog(): Promise<string> {
    return "version 1\nseed 0\n";
  }
}

function screenStroke(n: number) {
  return Array.from({ length: n }, (_, i) => ({ x: 200 + i, y: 240 }));
}

describe("UiSession", () => {
  it("walks the phases through the flows", async () => {
    const t = new FakeTransport();
    const s = new UiSession(t);
    await s.open();
    expect(s.phase).toBe("samples");
    const outline = Array.from({ length: 12 }, (_, i) => ({
      x: Math.cos((i / 12) * 2 * Math.PI),
      y: 0.7 * Math.sin((i / 12) * 2 * Math.PI),
    }));
    await s.fitOutline(outline);
    expect(s.phase).toBe("tesels");
    expect(t.posted[0].op).toBe("set_samples");
    expect(s.tesels?.cellCount).toBe(1);
    await s.editTesels([["subdivide", 0, "u"]]);
    expect(s.tesels?.cellCount).toBe(2);
    await s.lift();
    expect(s.phase).toBe("lifted");
    await s.buildAtlas();
    expect(s.phase).toBe("detailing");
    expect(t.posted.map((c) => c.op))
      .toEqual(["set_samples", "edit_tesels", "lift", "init_atlas"]);
  });

  it("posts exactly one sketch command per surface stroke", async () => {
    const t = new FakeTransport();
    const s = new UiSession(t);
    await s.open();
    const res = await s.surfaceStroke(screenStroke(50), new OrbitCamera(), 800, 600, 0.05, 0.1);
    expect(res.posted).toBe(true);
    expect(res.hits).toBe(50);
    expect(res.missed).toBe(0);
    const sketches = t.posted.filter((c) => c.op === "sketch_curve");
    expect(sketches).toHaveLength(1);
    expect((sketches[0] as { points: Vec3[] }).points).toHaveLength(50);
  });

  it("drops misses and reports the count", async () => {
    const t = new FakeTransport();
    let k = 0;
    t.pickResponder = () => (k++ % 5 === 0 ? null : [1, 0, 0]);
    const s = new UiSession(t);
    await s.open();
    const res = await s.surfaceStroke(screenStroke(50), new OrbitCamera(), 800, 600, 0.05, 0.1);
    expect(res.missed).toBe(10);
    expect(res.hits).toBe(40);
    const sketches = t.posted.filter((c) => c.op === "sketch_curve");
    expect((sketches[0] as { points: Vec3[] }).points).toHaveLength(40);
  });

  it("does not post when the whole stroke misses", async () => {
    const t = new FakeTransport();
    t.pickResponder = () => null;
    const s = new UiSession(t);
    await s.open();
    const res = await s.surfaceStroke(screenStroke(8), new OrbitCamera(), 800, 600, 0.05, 0.1);
    expect(res.posted).toBe(false);
    expect(t.posted).toHaveLength(0);
  });

  it("serializes commands: one in flight, later gestures queue", async () => {
    const t = new FakeTransport();
    const s = new UiSession(t);
    await s.open();
    t.hold = true;
    const first = s.post({ op: "lift" });
    const second = s.post({ op: "init_atlas" });
    await new Promise((r) => setTimeout(r, 10));
    expect(t.posted).toHaveLength(0); // first is held, second queued
    t.delayed.shift()!();
    await first;
    expect(t.posted.map((c) => c.op)).toEqual(["lift"]);
    t.hold = false;
    await second;
    expect(t.posted.map((c) => c.op)).toEqual(["lift", "init_atlas"]);
  });

  it("eps slider posts SetEpsilon then Adapt", async () => {
    const t = new FakeTransport();
    const s = new UiSession(t);
    await s.open();
    await s.setEpsilon(1e-4);
    expect(t.posted.map((c) => c.op)).toEqual(["set_epsilon", "adapt"]);
  });
});

describe("camera rays", () => {
  it("center pixel looks at the target", () => {
    const cam = new OrbitCamera();
    const { origin, dir } = cam.screenRay(400, 300, 800, 600);
    const eye = cam.eye();
    expect(origin).toEqual(eye);
    // the ray through the center passes near the target
    const t = -(eye[0] * dir[0] + eye[1] * dir[1] + eye[2] * dir[2]);
    const closest = [eye[0] + t * dir[0], eye[1] + t * dir[1], eye[2] + t * dir[2]];
    expect(Math.hypot(...closest)).toBeLessThan(1e-6);
  });
});
