// Browser companion: draw construct lines, shape tesels, lift, then sketch
// height curves on the surface and tune the error threshold.

import { HttpTransport, ApiError } from "./api.js";
import { UiSession } from "./session.js";
import { Viewer } from "./viewer.js";
import type { Point2 } from "./sketch.js";
import type { TeselEdit } from "./commands.js";

const root = document.getElementById("app") ?? document.body;

const toolbar = el("div", "toolbar");
const hud = el("div", "hud");
const toast = el("div", "toast");
const stage = el("div", "stage");
const glCanvas = document.createElement("canvas");
glCanvas.className = "gl";
const overlay = document.createElement("canvas");
overlay.className = "overlay";
stage.append(glCanvas, overlay);
root.append(toolbar, stage, hud, toast);

const viewer = new Viewer(glCanvas);
const session = new UiSession(new HttpTransport(""));
const ctx = overlay.getContext("2d")!;

let sketchMode = false;          // camera frozen while true
let strokePts: Point2[] = [];
let drawing = false;
let dragVertex: number | null = null;
let selectedCell: number | null = null;
let missedBadge = "";

const heightSlider = slider("height h", -0.2, 0.2, 0.05, 0.005);
const radiusSlider = slider("radius r", 0.02, 0.4, 0.12, 0.005);
const epsSlider = slider("log10 eps", -4.5, -2, -2.7, 0.1);

function el(tag: string, cls: string): HTMLElement {
  const e = document.createElement(tag);
  e.className = cls;
  return e;
}

function slider(label: string, min: number, max: number, value: number, step: number) {
  const wrap = el("label", "slider");
  wrap.textContent = label;
  const input = document.createElement("input");
  input.type = "range";
  Object.assign(input, { min: String(min), max: String(max), step: String(step), value: String(value) });
  const out = el("span", "value");
  out.textContent = String(value);
  input.oninput = () => (out.textContent = input.value);
  wrap.append(input, out);
  return { wrap, input };
}

function button(label: string, onclick: () => void): HTMLButtonElement {
  const b = document.createElement("button");
  b.textContent = label;
  b.onclick = onclick;
  return b;
}

function showToast(message: string): void {
  toast.textContent = message;
  toast.classList.add("visible");
  setTimeout(() => toast.classList.remove("visible"), 3500);
}

function run(task: Promise<unknown>): void {
  task.catch((err) => {
    showToast(err instanceof ApiError ? `server: ${err.message}` : String(err));
  }).finally(renderAll);
}

// ----------------------------------------------------------------- toolbar

function rebuildToolbar(): void {
  toolbar.replaceChildren();
  if (session.phase === "samples") {
    toolbar.append(
      label("draw a closed outline, then"),
      button("fit surface", () => run(session.fitOutline(strokePts).then(() => {
        strokePts = [];
      }))));
  } else if (session.phase === "tesels") {
    toolbar.append(
      label("drag grid corners; click a cell to select"),
      button("split cell |", () => withCell((c) => [["subdivide", c, "u"]])),
      button("split cell —", () => withCell((c) => [["subdivide", c, "v"]])),
      button("toggle torus", () => withCell((c) => {
        const kind = session.tesels!.kinds[c] === "torus" ? "cube" : "torus";
        return [["kind", c, kind] as TeselEdit];
      })),
      button("lift", () => run(session.lift())));
  } else if (session.phase === "lifted") {
    toolbar.append(label("base mesh ready"),
                   button("edit tesels", () => {
                     session.phase = "tesels";  // next edit drops the lift server-side
                     renderAll();
                   }),
                   button("build atlas", () => run(session.buildAtlas())));
  } else {
    const sketchBtn = button(sketchMode ? "sketching (camera frozen)" : "sketch on surface",
                             () => {
                               sketchMode = !sketchMode;
                               rebuildToolbar();
                             });
    sketchBtn.classList.toggle("active", sketchMode);
    toolbar.append(sketchBtn, heightSlider.wrap, radiusSlider.wrap, epsSlider.wrap,
                   button("apply eps", () => run(session.setEpsilon(10 ** Number(epsSlider.input.value)))),
                   button("download log", () => run(downloadLog())));
  }
}

function label(text: string): HTMLElement {
  const s = el("span", "hint");
  s.textContent = text;
  return s;
}

function withCell(make: (cell: number) => TeselEdit[]): void {
  if (selectedCell === null) {
    showToast("select a cell first");
    return;
  }
  run(session.editTesels(make(selectedCell)));
}

async function downloadLog(): Promise<void> {
  const text = await session.downloadLog();
  const blob = new Blob([text], { type: "text/plain" });
  const a = document.createElement("a");
  a.href = URL.createObjectURL(blob);
  a.download = "session.scene";
  a.click();
  URL.revokeObjectURL(a.href);
}

// ------------------------------------------------------------ plane editor

const PLANE_SCALE = 160;  // pixels per model unit

function toPlane(x: number, y: number): Point2 {
  return { x: (x - overlay.width / 2) / PLANE_SCALE,
           y: (overlay.height / 2 - y) / PLANE_SCALE };
}

function toScreen(p: Point2): Point2 {
  return { x: overlay.width / 2 + p.x * PLANE_SCALE,
           y: overlay.height / 2 - p.y * PLANE_SCALE };
}

function drawOverlay(): void {
  overlay.width = stage.clientWidth || 800;
  overlay.height = stage.clientHeight || 600;
  ctx.clearRect(0, 0, overlay.width, overlay.height);
  if (session.phase === "samples") {
    drawPolyline(strokePts.map(toScreen), "#e9c46a", true);
  } else if (session.phase === "tesels" && session.tesels) {
    const t = session.tesels;
    for (let cell = 0; cell < t.cellCount; cell++) {
      const corners = t.cellCorners(cell).map((i) => toScreen(t.verts[i]));
      ctx.beginPath();
      corners.forEach((p, i) => (i ? ctx.lineTo(p.x, p.y) : ctx.moveTo(p.x, p.y)));
      ctx.closePath();
      ctx.fillStyle = cell === selectedCell ? "rgba(233,196,106,0.25)"
        : t.kinds[cell] === "torus" ? "rgba(130,170,255,0.18)" : "rgba(255,255,255,0.06)";
      ctx.fill();
      ctx.strokeStyle = "#7fa8c9";
      ctx.stroke();
    }
    for (const v of t.verts) {
      const s = toScreen(v);
      ctx.fillStyle = "#e9c46a";
      ctx.beginPath();
      ctx.arc(s.x, s.y, 5, 0, Math.PI * 2);
      ctx.fill();
    }
  } else if (sketchMode && strokePts.length) {
    drawPolyline(strokePts, "#e76f51", false);
  }
}

function drawPolyline(pts: Point2[], color: string, closed: boolean): void {
  if (pts.length < 2) return;
  ctx.beginPath();
  pts.forEach((p, i) => (i ? ctx.lineTo(p.x, p.y) : ctx.moveTo(p.x, p.y)));
  if (closed) ctx.closePath();
  ctx.strokeStyle = color;
  ctx.lineWidth = 2;
  ctx.stroke();
}

// ---------------------------------------------------------------- pointers

overlay.addEventListener("pointerdown", (ev) => {
  overlay.setPointerCapture(ev.pointerId);
  const pt = { x: ev.offsetX, y: ev.offsetY };
  if (session.phase === "samples" || (session.phase === "detailing" && sketchMode)) {
    drawing = true;
    strokePts = session.phase === "samples" ? [toPlane(pt.x, pt.y)] : [pt];
  } else if (session.phase === "tesels" && session.tesels) {
    const plane = toPlane(pt.x, pt.y);
    dragVertex = session.tesels.nearestVertex(plane, 16 / PLANE_SCALE);
    if (dragVertex === null) {
      selectedCell = session.tesels.cellAt(plane);
    }
  } else if (session.phase === "detailing") {
    drawing = true; // orbit drag
    strokePts = [pt];
  }
  renderAll();
});

overlay.addEventListener("pointermove", (ev) => {
  const pt = { x: ev.offsetX, y: ev.offsetY };
  if (session.phase === "samples" && drawing) {
    strokePts.push(toPlane(pt.x, pt.y));
  } else if (session.phase === "tesels" && dragVertex !== null && session.tesels) {
    session.tesels.verts[dragVertex] = toPlane(pt.x, pt.y);
  } else if (session.phase === "detailing" && drawing) {
    if (sketchMode) {
      strokePts.push(pt);
    } else {
      const last = strokePts[strokePts.length - 1];
      viewer.camera.orbit(pt.x - last.x, pt.y - last.y);
      strokePts = [pt];
    }
  }
  renderAll();
});

overlay.addEventListener("pointerup", () => {
  if (session.phase === "tesels" && dragVertex !== null && session.tesels) {
    const v = session.tesels.verts[dragVertex];
    const idx = dragVertex;
    dragVertex = null;
    run(session.editTesels([["move", idx, v.x, v.y]]));
  } else if (session.phase === "detailing" && sketchMode && drawing && strokePts.length >= 2) {
    const pts = strokePts;
    strokePts = [];
    run(session.surfaceStroke(pts, viewer.camera, overlay.width, overlay.height,
                              Number(heightSlider.input.value),
                              Number(radiusSlider.input.value))
      .then((res) => {
        missedBadge = res.missed ? `${res.missed} samples missed the surface` : "";
        if (!res.posted) showToast("stroke missed the surface");
      }));
  }
  drawing = false;
  renderAll();
});

overlay.addEventListener("wheel", (ev) => {
  if (session.phase === "detailing" && !sketchMode) {
    viewer.camera.zoom(ev.deltaY > 0 ? 1.1 : 0.9);
    ev.preventDefault();
    renderAll();
  }
});

// ------------------------------------------------------------------- HUD

function renderAll(): void {
  if (session.mesh) viewer.setMesh(session.mesh);
  viewer.draw();
  drawOverlay();
  const v = session.mesh ? session.mesh.vertexCount : 0;
  const f = session.mesh ? session.mesh.faceCount : 0;
  hud.textContent = `phase ${session.phase} · generation ${session.generation}`
    + ` · ${v} vertices / ${f} faces`
    + (missedBadge ? ` · ${missedBadge}` : "");
  rebuildToolbar();
}

session.onchange = renderAll;

session.open().then(() => {
  renderAll();
  const loop = () => {
    viewer.draw();
    requestAnimationFrame(loop);
  };
  loop();
}).catch((err) => showToast(`cannot reach the session service: ${err}`));
