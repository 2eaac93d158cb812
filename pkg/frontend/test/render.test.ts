import { test } from "node:test";
import assert from "node:assert/strict";
import { mkdtempSync, readFileSync, writeFileSync, mkdirSync, cpSync } from "fs";
import { tmpdir } from "os";
import { join, dirname } from "path";
import { fileURLToPath } from "url";
import { openRunDir, loadSnapshot, toGrid, cutAlongY } from "../src/snapshot.js";
import { marchingSquares, plotColoredContour, plotContourLines, plotProfile } from "../src/plots.js";
import { parseArgs, renderRunDir } from "../src/render.js";
import { SchemaError } from "../src/csv.js";

const here = dirname(fileURLToPath(import.meta.url));
const testdata = join(here, "..", "..", "testdata");

test("loads a real 1D run and renders the five-panel profile set", () => {
  const run = openRunDir(join(testdata, "ex43"));
  const frame = loadSnapshot(run);
  assert.equal(frame.oneDimensional, true);
  assert.deepEqual(frame.species, ["z_1", "z_2", "z_3"]);
  const out = mkdtempSync(join(tmpdir(), "mpdg-fig-"));
  const files = renderRunDir({ runDir: join(testdata, "ex43"), vars: null, cut: 0, out, snapshot: null });
  const names = files.map((f) => f.split("/").pop());
  assert.deepEqual(names, [
    "profile_rho_1.svg",
    "profile_rho_2.svg",
    "profile_rho_3.svg",
    "profile_u.svg",
    "profile_p.svg",
  ]);
  for (const f of files) {
    const svg = readFileSync(f, "utf8");
    assert.ok(svg.startsWith("<svg"));
    assert.ok(svg.includes("polyline"));
  }
});

test("renders 2D contour, contour-line and cut panels", () => {
  const out = mkdtempSync(join(tmpdir(), "mpdg-fig-"));
  const files = renderRunDir({ runDir: join(testdata, "ex44"), vars: null, cut: 0, out, snapshot: null });
  const names = files.map((f) => f.split("/").pop());
  assert.deepEqual(names, [
    "contour_rho.svg",
    "contour_lines_rho.svg",
    "cut_rho.svg",
    "contour_p.svg",
    "contour_lines_p.svg",
    "cut_p.svg",
  ]);
  const contour = readFileSync(files[0], "utf8");
  assert.ok(contour.includes("<rect"));
  const lines = readFileSync(files[1], "utf8");
  assert.ok(lines.includes("<line"));
});

test("rendering is byte-stable", () => {
  const run = openRunDir(join(testdata, "ex43"));
  const frame = loadSnapshot(run);
  assert.equal(plotProfile(frame, "p"), plotProfile(frame, "p"));
});

test("sweep table renders a curve", () => {
  const out = mkdtempSync(join(tmpdir(), "mpdg-fig-"));
  const files = renderRunDir({ runDir: join(testdata, "sweep"), vars: null, cut: 0, out, snapshot: null });
  assert.ok(files.some((f) => f.endsWith("sweep_mpms2.svg")));
});

test("schema mismatch fails with a named-column diagnostic", () => {
  const bad = mkdtempSync(join(tmpdir(), "mpdg-bad-"));
  mkdirSync(join(bad, "snapshots"));
  writeFileSync(join(bad, "config.json"), JSON.stringify({ case: "x", params: {} }));
  writeFileSync(join(bad, "snapshots", "final.csv"), "x,y,rho,u,v,T,z_1\n0,0,1,0,0,1,1\n");
  assert.throws(
    () => renderRunDir({ runDir: bad, vars: null, cut: 0, out: bad, snapshot: null }),
    (err: Error) => err instanceof SchemaError && err.message.includes("'p'"),
  );
});

test("run dir without config.json is rejected", () => {
  const empty = mkdtempSync(join(tmpdir(), "mpdg-empty-"));
  assert.throws(() => openRunDir(empty), /missing config.json/);
});

test("grid reconstruction and y-cut on the 2D run", () => {
  const run = openRunDir(join(testdata, "ex44"));
  const frame = loadSnapshot(run);
  const grid = toGrid(frame, "rho");
  assert.equal(grid.xs.length, 48); // 24 cells x 2 Gauss nodes
  assert.equal(grid.ys.length, 48);
  assert.ok(grid.values.every((col) => col.every(Number.isFinite)));
  const cut = cutAlongY(frame, "p", 0);
  assert.equal(cut.points.length, 48);
  const xs = cut.points.map((p) => p[0]);
  assert.ok(xs.every((v, i) => i === 0 || v > xs[i - 1]));
});

test("marching squares finds a circle-like front", () => {
  const xs = Array.from({ length: 21 }, (_, i) => i / 20);
  const ys = xs;
  const values = xs.map((x) => ys.map((y) => (x - 0.5) ** 2 + (y - 0.5) ** 2));
  const segs = marchingSquares({ xs, ys, values }, 0.09); // circle radius 0.3
  assert.ok(segs.length > 20);
  for (const [x0, y0, x1, y1] of segs) {
    for (const [x, y] of [[x0, y0], [x1, y1]] as Array<[number, number]>) {
      const r = Math.hypot(x - 0.5, y - 0.5);
      assert.ok(Math.abs(r - 0.3) < 0.06, `segment endpoint off the contour: r=${r}`);
    }
  }
});

test("argument parsing", () => {
  const a = parseArgs(["--run-dir", "d", "--vars", "rho,p", "--cut", "y=1.5"]);
  assert.equal(a.runDir, "d");
  assert.deepEqual(a.vars, ["rho", "p"]);
  assert.equal(a.cut, 1.5);
  assert.throws(() => parseArgs([]), /run-dir/);
  assert.throws(() => parseArgs(["--run-dir", "d", "--cut", "x=1"]), /y=/);
});
