/** CLI: render figures from an mpdg run directory.
 *
 *   mpdg-render --run-dir out/<case>/<stamp> [--vars rho,u,p] [--cut y=0]
 *               [--snapshot FILE] [--out DIR]
 *
 * 1D runs get one profile panel per variable (defaults: the species
 * partial densities, velocity, pressure). 2D runs get colored contours
 * and contour lines of density and pressure plus y-cut line plots.
 * Sweep/study tables get log-error curves. Rendering is read-only and
 * byte-stable for fixed inputs.
 */

import { mkdirSync, readFileSync, writeFileSync } from "fs";
import { join } from "path";
import { parseCsv, column, SchemaError } from "./csv.js";
import { loadSnapshot, openRunDir } from "./snapshot.js";
import {
  plotColoredContour,
  plotContourLines,
  plotCut,
  plotProfile,
  plotSweepCurve,
} from "./plots.js";

interface Args {
  runDir: string;
  vars: string[] | null;
  cut: number;
  out: string | null;
  snapshot: string | null;
}

export function parseArgs(argv: string[]): Args {
  const args: Args = { runDir: "", vars: null, cut: 0, out: null, snapshot: null };
  for (let i = 0; i < argv.length; i++) {
    const a = argv[i];
    if (a === "--run-dir") args.runDir = argv[++i];
    else if (a === "--vars") args.vars = argv[++i].split(",").map((s) => s.trim());
    else if (a === "--cut") {
      const m = /^y=(.+)$/.exec(argv[++i]);
      if (!m) throw new Error("--cut expects y=<value>");
      args.cut = Number(m[1]);
    } else if (a === "--out") args.out = argv[++i];
    else if (a === "--snapshot") args.snapshot = argv[++i];
    else throw new Error(`unknown argument ${a}`);
  }
  if (!args.runDir) throw new Error("--run-dir is required");
  return args;
}

export function renderRunDir(args: Args): string[] {
  const run = openRunDir(args.runDir);
  const outDir = args.out ?? join(args.runDir, "figures");
  mkdirSync(outDir, { recursive: true });
  const written: string[] = [];

  const emit = (name: string, svg: string) => {
    const path = join(outDir, name);
    writeFileSync(path, svg);
    written.push(path);
  };

  if (run.snapshotFiles.length > 0) {
    const frame = loadSnapshot(run, args.snapshot ?? undefined);
    if (frame.oneDimensional) {
      const vars =
        args.vars ?? [...frame.species.map((_, i) => `rho_${i + 1}`), "u", "p"];
      for (const v of vars) {
        emit(`profile_${v}.svg`, plotProfile(frame, v));
      }
    } else {
      const vars = args.vars ?? ["rho", "p"];
      for (const v of vars) {
        emit(`contour_${v}.svg`, plotColoredContour(frame, v));
        emit(`contour_lines_${v}.svg`, plotContourLines(frame, v));
        emit(`cut_${v}.svg`, plotCut(frame, v, args.cut));
      }
    }
  }

  if (run.tableFile) {
    const table = parseCsv(readFileSync(run.tableFile, "utf8"));
    if (table.columns.includes("s") && table.columns.includes("error")) {
      const schemes = table.columns.includes("scheme")
        ? [...new Set(tableStrings(run.tableFile, "scheme"))]
        : ["sweep"];
      for (const scheme of schemes) {
        const rows = sweepRows(run.tableFile, scheme);
        emit(`sweep_${scheme}.svg`, plotSweepCurve(rows, scheme));
      }
    }
  }

  if (written.length === 0) {
    throw new SchemaError(`${args.runDir} contains nothing renderable (no snapshots, no sweep table)`);
  }
  return written;
}

function tableStrings(path: string, name: string): string[] {
  const lines = readFileSync(path, "utf8").split(/\r?\n/).filter((l) => l.trim());
  const cols = lines[0].split(",");
  const idx = cols.indexOf(name);
  return lines.slice(1).map((l) => l.split(",")[idx]);
}

function sweepRows(path: string, scheme: string) {
  const text = readFileSync(path, "utf8");
  const table = parseCsv(text);
  const sCol = column(table, "s");
  const eCol = column(table, "error");
  const schemes = table.columns.includes("scheme") ? tableStrings(path, "scheme") : null;
  const rows = [];
  for (let r = 0; r < table.rows; r++) {
    if (schemes === null || schemes[r] === scheme) {
      rows.push({ s: sCol[r], error: eCol[r] });
    }
  }
  return rows;
}

const isMain = process.argv[1] && import.meta.url.endsWith(process.argv[1].split("/").pop() ?? "");
if (isMain) {
  try {
    const files = renderRunDir(parseArgs(process.argv.slice(2)));
    for (const f of files) console.log(f);
  } catch (err) {
    console.error(`[mpdg-render] error: ${(err as Error).message}`);
    process.exit(2);
  }
}
