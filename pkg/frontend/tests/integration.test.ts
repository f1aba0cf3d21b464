// End-to-end round trip against the real session service.
//
// Covers the UI acceptance contract: a 50-point surface stroke posts exactly
// one sketch command, the generation increments, and replaying the
// downloaded command log headlessly reproduces the same mesh hash.

import { afterAll, beforeAll, describe, expect, it } from "vitest";
import { spawn, type ChildProcess } from "node:child_process";

import { HttpTransport } from "../src/api.js";
import { parseSceneLog } from "../src/commands.js";
import { OrbitCamera } from "../src/camera.js";
import { meshHash } from "../src/payload.js";
import { UiSession } from "../src/session.js";

const PORT = 8765 + Math.floor(Math.random() * 1000);
const BASE = `http://127.0.0.1:${PORT}`;
let server: ChildProcess;

async function waitForServer(timeoutMs = 30000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    try {
      const res = await fetch(`${BASE}/sessions`, { method: "POST" });
      if (res.ok) return;
    } catch {
      /* not up yet */
    }
    await new Promise((r) => setTimeout(r, 250));
  }
  throw new Error("session service did not come up");
}

beforeAll(async () => {
  server = spawn("python3", ["-m", "dass.cli", "serve", "--addr", `127.0.0.1:${PORT}`],
                 { cwd: "..", stdio: "ignore" });
  await waitForServer();
}, 40000);

afterAll(() => {
  server?.kill();
});

function circleOutline(n = 16) {
  return Array.from({ length: n }, (_, i) => ({
    x: 0.9 * Math.cos((i / n) * 2 * Math.PI),
    y: 0.7 * Math.sin((i / n) * 2 * Math.PI),
  }));
}

describe("UI round trip against the live service", () => {
  it("stroke -> one command -> replayed log reproduces the mesh hash", async () => {
    const transport = new HttpTransport(BASE);
    const ui = new UiSession(transport);
    await ui.open();

    // green flow: outline -> tesels -> lift -> atlas
    await ui.fitOutline(circleOutline());
    const t = ui.tesels!;
    await ui.editTesels([
      ["move", t.vertexId(0, 0), -0.5, -0.38],
      ["move", t.vertexId(0, 1), 0.5, -0.38],
      ["move", t.vertexId(1, 0), -0.5, 0.38],
      ["move", t.vertexId(1, 1), 0.5, 0.38],
    ]);
    await ui.lift();
    await ui.buildAtlas();
    await ui.post({ op: "set_epsilon", value: 0.005 });
    expect(ui.phase).toBe("detailing");
    expect(ui.mesh).not.toBeNull();

    // 50-point surface stroke with a frozen camera
    const camera = new OrbitCamera();
    camera.distance = 5;
    const screenPts = Array.from({ length: 50 }, (_, i) => ({
      x: 320 + i * 2.2,
      y: 300 + 18 * Math.sin(i / 8),
    }));
    const genBefore = ui.generation;
    const postedBefore = await countSketchCommands(transport, ui.id);
    const res = await ui.surfaceStroke(screenPts, camera, 800, 600, 0.04, 0.12);
    expect(res.posted).toBe(true);
    expect(res.hits + res.missed).toBe(50);
    expect(res.hits).toBeGreaterThanOrEqual(2);
    const postedAfter = await countSketchCommands(transport, ui.id);
    expect(postedAfter - postedBefore).toBe(1);          // exactly one command
    expect(ui.generation).toBe(genBefore + 1);           // one generation step

    // download the log, replay it headlessly into a fresh session
    const log = await ui.downloadLog();
    const { commands } = parseSceneLog(log);
    const replayed = new UiSession(transport);
    await replayed.open();
    for (const cmd of commands) {
      await replayed.post(cmd);
    }
    const original = await transport.getMesh(ui.id);
    const rebuilt = await transport.getMesh(replayed.id);
    expect(original).not.toBeNull();
    expect(rebuilt).not.toBeNull();
    expect(meshHash(rebuilt!)).toBe(meshHash(original!));
  }, 120000);
});

async function countSketchCommands(transport: HttpTransport, id: string): Promise<number> {
  const log = await transport.getLog(id);
  return parseSceneLog(log).commands.filter((c) => c.op === "sketch_curve").length;
}
