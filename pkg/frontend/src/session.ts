// Session controller: phase machine, serialized command queue, mesh state.
//
// Every user gesture becomes exactly one command.  Commands go out one at a
// time (later gestures queue client-side); the view refreshes whenever the
// server reports a new generation.  All state here is derivable from server
// state plus the camera, so replaying the downloaded log reproduces the
// same mesh.

import type { Transport } from "./api.js";
import type { CommandJson, MutationReport, SamplePair, TeselEdit, Vec3 } from "./commands.js";
import { decodeMeshPayload, meshHash, type MeshPayload } from "./payload.js";
import type { OrbitCamera } from "./camera.js";
import { outlineBBox, outlineToSamples, type Point2 } from "./sketch.js";
import { TeselMirror } from "./tesels.js";

export type Phase = "samples" | "tesels" | "lifted" | "detailing";

export interface StrokeResult {
  posted: boolean;
  hits: number;
  missed: number;
  report?: MutationReport;
}

export class UiSession {
  id = "";
  phase: Phase = "samples";
  generation = 0;
  mesh: MeshPayload | null = null;
  meshHash = "";
  tesels: TeselMirror | null = null;
  onchange: (() => void) | null = null;

  private chain: Promise<unknown> = Promise.resolve();

  constructor(private transport: Transport) {}

  async open(): Promise<void> {
    const created = await this.transport.createSession();
    this.id = created.id;
    this.generation = created.generation;
  }

  /** Serialize commands: a gesture waits for the previous one to commit. */
  post(cmd: CommandJson): Promise<MutationReport> {
    const next = this.chain.then(async () => {
      const report = await this.transport.postCommand(this.id, cmd);
      this.generation = report.generation;
      await this.refreshMesh();
      this.onchange?.();
      return report;
    });
    // keep the chain alive after failures so later gestures still run
    this.chain = next.catch(() => undefined);
    return next;
  }

  async refreshMesh(): Promise<void> {
    const since = this.mesh ? this.mesh.generation : undefined;
    const buf = await this.transport.getMesh(this.id, since);
    if (buf === null) return;
    this.mesh = decodeMeshPayload(buf);
    this.meshHash = meshHash(buf);
  }

  // ------------------------------------------------------------- gestures

  /** Construct-line outline on the drawing plane -> one SetSamples. */
  async fitOutline(points: Point2[], sampleCount = 16): Promise<MutationReport> {
    const samples = outlineToSamples(points, sampleCount);
    const report = await this.post({ op: "set_samples", samples });
    const { lo, hi } = outlineBBox(samples.map(([p]) => ({ x: p[0], y: p[1] })));
    this.tesels = TeselMirror.fromBBox(lo, hi);
    this.phase = "tesels";
    return report;
  }

  /** Tesel gestures -> one EditTesels carrying the batched edits. */
  async editTesels(edits: TeselEdit[]): Promise<MutationReport> {
    if (!this.tesels) throw new Error("no tesel complex yet");
    const report = await this.post({ op: "edit_tesels", edits });
    for (const e of edits) this.tesels.apply(e);
    this.phase = "tesels";
    return report;
  }

  async lift(): Promise<MutationReport> {
    const report = await this.post({ op: "lift" });
    this.phase = "lifted";
    return report;
  }

  async buildAtlas(): Promise<MutationReport> {
    const report = await this.post({ op: "init_atlas" });
    this.phase = "detailing";
    return report;
  }

  /** Threshold slider -> SetEpsilon followed by Adapt. */
  async setEpsilon(value: number): Promise<MutationReport> {
    await this.post({ op: "set_epsilon", value });
    return this.post({ op: "adapt" });
  }

  /**
   * Surface stroke with a frozen camera: resolve every screen sample
   * through the pick endpoint, drop the misses (reported in the result),
   * and post exactly one sketch command for the surviving polyline.
   */
  async surfaceStroke(screenPoints: Point2[], camera: OrbitCamera,
                      width: number, height: number,
                      h: number, r: number): Promise<StrokeResult> {
    const pts: Vec3[] = [];
    let missed = 0;
    for (const sp of screenPoints) {
      const ray = camera.screenRay(sp.x, sp.y, width, height);
      const hit = await this.transport.pick(this.id, ray.origin, ray.dir);
      if (hit === null) missed += 1;
      else pts.push(hit);
    }
    if (pts.length < 2) {
      return { posted: false, hits: pts.length, missed };
    }
    const report = await this.post({ op: "sketch_curve", h, r, points: pts });
    return { posted: true, hits: pts.length, missed, report };
  }

  async downloadLog(): Promise<string> {
    return this.transport.getLog(this.id);
  }
}
