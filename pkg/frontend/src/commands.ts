// Command JSON shapes (the wire format mirrors the scene-log lines 1:1)
// plus a parser for downloaded scene logs, so a log can be replayed by
// posting its commands back through the API.

export type Vec3 = [number, number, number];
export type SamplePair = [Vec3, Vec3]; // position, unit normal

export type TeselEdit =
  | ["subdivide", number, "u" | "v"]
  | ["move", number, number, number]
  | ["kind", number, "cube" | "torus"];

export type CommandJson =
  | { op: "set_samples"; samples: SamplePair[]; plane?: PlaneJson }
  | { op: "move_samples"; samples: SamplePair[] }
  | { op: "edit_tesels"; edits: TeselEdit[] }
  | { op: "lift" }
  | { op: "init_atlas" }
  | { op: "sketch_curve"; h: number; r: number; points: Vec3[] }
  | { op: "load_raster"; chart: number; file: string; scale: number }
  | { op: "set_epsilon"; value: number }
  | { op: "adapt"; mode?: "local" | "simple" }
  | { op: "export_obj"; path: string };

export interface PlaneJson {
  origin: number[];
  ex: number[];
  ey: number[];
}

export interface MutationReport {
  op: string;
  generation: number;
  vertices: number;
  faces: number;
  [key: string]: unknown;
}

function floats(tok: string): number[] {
  return tok.split(",").filter((s) => s.length).map(Number);
}

function samplesFrom(tokens: string[]): SamplePair[] {
  return tokens.map((t) => {
    const v = floats(t);
    if (v.length !== 6 || v.some(Number.isNaN)) throw new Error(`bad sample ${t}`);
    return [[v[0], v[1], v[2]], [v[3], v[4], v[5]]] as SamplePair;
  });
}

/** Parse one scene-log command line; header/comment lines yield null. */
export function parseSceneLine(line: string): CommandJson | null {
  const trimmed = line.trim();
  if (!trimmed || trimmed.startsWith("#")) return null;
  const tokens = trimmed.split(/\s+/);
  const op = tokens[0];
  if (op === "version" || op === "seed") return null;
  const kw: Record<string, string> = {};
  const pos: string[] = [];
  for (const t of tokens.slice(1)) {
    const eq = t.indexOf("=");
    const key = eq > 0 ? t.slice(0, eq) : "";
    if (["plane", "h", "r", "chart", "scale", "file", "mode"].includes(key)) {
      kw[key] = t.slice(eq + 1);
    } else {
      pos.push(t);
    }
  }
  switch (op) {
    case "set_samples": {
      const cmd: CommandJson = { op, samples: samplesFrom(pos) };
      if (kw.plane) {
        const v = floats(kw.plane);
        if (v.length !== 9) throw new Error("plane needs 9 floats");
        cmd.plane = { origin: v.slice(0, 3), ex: v.slice(3, 6), ey: v.slice(6, 9) };
      }
      return cmd;
    }
    case "move_samples":
      return { op, samples: samplesFrom(pos) };
    case "edit_tesels": {
      const edits: TeselEdit[] = pos.map((t) => {
        const [kind, ident, rest] = splitThree(t);
        if (kind === "subdivide") return ["subdivide", Number(ident), rest as "u" | "v"];
        if (kind === "move") {
          const [x, y] = floats(rest);
          return ["move", Number(ident), x, y];
        }
        if (kind === "kind") return ["kind", Number(ident), rest as "cube" | "torus"];
        throw new Error(`unknown tesel edit ${t}`);
      });
      return { op, edits };
    }
    case "lift":
      return { op };
    case "init_atlas":
      return { op };
    case "sketch_curve":
      return { op, h: Number(kw.h), r: Number(kw.r),
               points: pos.map((t) => floats(t) as Vec3) };
    case "load_raster":
      return { op, chart: Number(kw.chart), file: kw.file, scale: Number(kw.scale) };
    case "set_epsilon":
      return { op, value: Number(pos[0]) };
    case "adapt":
      return { op, mode: (kw.mode as "local" | "simple") ?? "local" };
    case "export_obj":
      return { op, path: pos[0] };
    default:
      throw new Error(`unknown command ${op}`);
  }
}

function splitThree(t: string): [string, string, string] {
  const i = t.indexOf(":");
  const j = t.indexOf(":", i + 1);
  if (i < 0 || j < 0) throw new Error(`bad edit token ${t}`);
  return [t.slice(0, i), t.slice(i + 1, j), t.slice(j + 1)];
}

export function parseSceneLog(text: string): { seed: number; commands: CommandJson[] } {
  let seed = 0;
  const commands: CommandJson[] = [];
  for (const line of text.split("\n")) {
    const trimmed = line.trim();
    if (trimmed.startsWith("seed ")) seed = Number(trimmed.slice(5));
    const cmd = parseSceneLine(line);
    if (cmd) commands.push(cmd);
  }
  return { seed, commands };
}
