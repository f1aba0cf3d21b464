import { describe, expect, it } from "vitest";

import { parseSceneLine, parseSceneLog } from "../src/commands.js";

describe("scene log parsing", () => {
  it("skips headers and comments", () => {
    expect(parseSceneLine("version 1")).toBeNull();
    expect(parseSceneLine("seed 42")).toBeNull();
    expect(parseSceneLine("# comment")).toBeNull();
    expect(parseSceneLine("   ")).toBeNull();
  });

  it("parses set_samples", () => {
    const cmd = parseSceneLine("set_samples 1.0,0.0,0.0,1.0,0.0,0.0 -1.0,0.0,0.0,-1.0,0.0,0.0");
    expect(cmd).toEqual({
      op: "set_samples",
      samples: [[[1, 0, 0], [1, 0, 0]], [[-1, 0, 0], [-1, 0, 0]]],
    });
  });

  it("parses tesel edits", () => {
    const cmd = parseSceneLine("edit_tesels subdivide:0:u move:3:0.5,-0.25 kind:1:torus");
    expect(cmd).toEqual({
      op: "edit_tesels",
      edits: [["subdivide", 0, "u"], ["move", 3, 0.5, -0.25], ["kind", 1, "torus"]],
    });
  });

  it("parses sketch_curve with scientific floats", () => {
    const cmd = parseSceneLine("sketch_curve h=0.05 r=1e-01 0.9,0.1,0.0 0.8,0.2,0.1");
    expect(cmd).toEqual({
      op: "sketch_curve", h: 0.05, r: 0.1,
      points: [[0.9, 0.1, 0], [0.8, 0.2, 0.1]],
    });
  });

  it("parses the remaining commands", () => {
    expect(parseSceneLine("lift")).toEqual({ op: "lift" });
    expect(parseSceneLine("init_atlas")).toEqual({ op: "init_atlas" });
    expect(parseSceneLine("set_epsilon 0.0001")).toEqual({ op: "set_epsilon", value: 1e-4 });
    expect(parseSceneLine("adapt mode=simple")).toEqual({ op: "adapt", mode: "simple" });
    expect(parseSceneLine("adapt")).toEqual({ op: "adapt", mode: "local" });
    expect(parseSceneLine("load_raster chart=2 scale=0.05 file=relief.pgm"))
      .toEqual({ op: "load_raster", chart: 2, file: "relief.pgm", scale: 0.05 });
    expect(parseSceneLine("export_obj out.obj")).toEqual({ op: "export_obj", path: "out.obj" });
  });

  it("rejects unknown ops", () => {
    expect(() => parseSceneLine("frobnicate 3")).toThrow();
  });

  it("parses a whole log", () => {
    const log = [
      "version 1",
      "seed 9",
      "set_samples 1.0,0.0,0.0,1.0,0.0,0.0 0.0,1.0,0.0,0.0,1.0,0.0",
      "lift",
      "",
    ].join("\n");
    const { seed, commands } = parseSceneLog(log);
    expect(seed).toBe(9);
    expect(commands.map((c) => c.op)).toEqual(["set_samples", "lift"]);
  });
});
