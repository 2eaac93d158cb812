/** Snapshot frames: parsed solver CSV output plus run metadata.
 *
 * The renderer consumes only the documented run-directory layout:
 *   config.json                  { case, params }
 *   snapshots/*.csv              x, y, rho, u, v, p, T, z_1..z_M
 *   table.csv                    study / sweep tables
 */

import { readFileSync, readdirSync, existsSync } from "fs";
import { join } from "path";
import { Table, column, parseCsv, speciesColumns, SchemaError } from "./csv.js";

const REQUIRED = ["x", "y", "rho", "u", "v", "p", "T"];

export interface SnapshotFrame {
  table: Table;
  caseId: string;
  params: Record<string, unknown>;
  species: string[];
  /** true when every node sits on y = 0 (a 1D field) */
  oneDimensional: boolean;
}

export interface RunDir {
  root: string;
  caseId: string;
  params: Record<string, unknown>;
  snapshotFiles: string[];
  tableFile: string | null;
}

export function openRunDir(root: string): RunDir {
  const configPath = join(root, "config.json");
  if (!existsSync(configPath)) {
    throw new SchemaError(`${root} is not a run directory: missing config.json`);
  }
  const config = JSON.parse(readFileSync(configPath, "utf8"));
  const snapDir = join(root, "snapshots");
  const snapshotFiles = existsSync(snapDir)
    ? readdirSync(snapDir)
        .filter((f) => f.endsWith(".csv"))
        .sort()
        .map((f) => join(snapDir, f))
    : [];
  const tableFile = existsSync(join(root, "table.csv")) ? join(root, "table.csv") : null;
  return { root, caseId: config.case, params: config.params ?? {}, snapshotFiles, tableFile };
}

export function loadSnapshot(run: RunDir, file?: string): SnapshotFrame {
  const path = file ?? pickFinal(run);
  const table = parseCsv(readFileSync(path, "utf8"));
  for (const name of REQUIRED) {
    column(table, name); // throws a named-column diagnostic when absent
  }
  const species = speciesColumns(table);
  if (species.length === 0) {
    throw new SchemaError(
      `snapshot has no species columns z_1..z_M (have: ${table.columns.join(", ")})`,
    );
  }
  const ys = column(table, "y");
  const oneDimensional = ys.every((v) => v === 0);
  return { table, caseId: run.caseId, params: run.params, species, oneDimensional };
}

function pickFinal(run: RunDir): string {
  const final = run.snapshotFiles.find((f) => f.endsWith("final.csv"));
  if (final) return final;
  if (run.snapshotFiles.length === 0) {
    throw new SchemaError(`${run.root} has no snapshot CSVs`);
  }
  return run.snapshotFiles[run.snapshotFiles.length - 1];
}

/** Derived per-node quantity by name: raw columns, species partial
 *  densities (rho_i = z_i * rho), or velocity magnitude. */
export function nodeValues(frame: SnapshotFrame, name: string): number[] {
  const m = /^rho_(\d+)$/.exec(name);
  if (m) {
    const z = column(frame.table, `z_${m[1]}`);
    const rho = column(frame.table, "rho");
    return z.map((v, i) => v * rho[i]);
  }
  if (name === "speed") {
    const u = column(frame.table, "u");
    const v = column(frame.table, "v");
    return u.map((ui, i) => Math.hypot(ui, v[i]));
  }
  return column(frame.table, name);
}

export interface GridField {
  xs: number[];
  ys: number[];
  /** values[ix][iy], NaN where no node exists (blocked cells) */
  values: number[][];
}

/** Reconstruct the tensor grid from scattered node rows. Solver nodes are
 * tensor products of per-axis Gauss coordinates, so the unique sorted
 * coordinates recover the grid; holes (solid cells) stay NaN. */
export function toGrid(frame: SnapshotFrame, name: string): GridField {
  const x = column(frame.table, "x");
  const y = column(frame.table, "y");
  const v = nodeValues(frame, name);
  const xs = uniqueSorted(x);
  const ys = uniqueSorted(y);
  const xi = indexer(xs);
  const yi = indexer(ys);
  const values: number[][] = xs.map(() => ys.map(() => NaN));
  for (let r = 0; r < frame.table.rows; r++) {
    values[xi(x[r])][yi(y[r])] = v[r];
  }
  return { xs, ys, values };
}

function uniqueSorted(v: number[]): number[] {
  const sorted = [...v].sort((a, b) => a - b);
  const out: number[] = [];
  const span = Math.max(sorted[sorted.length - 1] - sorted[0], 1e-300);
  for (const val of sorted) {
    if (out.length === 0 || val - out[out.length - 1] > 1e-9 * span) {
      out.push(val);
    }
  }
  return out;
}

function indexer(axis: number[]): (v: number) => number {
  return (v: number) => {
    let lo = 0;
    let hi = axis.length - 1;
    while (lo < hi) {
      const mid = (lo + hi) >> 1;
      if (axis[mid] < v) lo = mid + 1;
      else hi = mid;
    }
    if (lo > 0 && Math.abs(axis[lo - 1] - v) < Math.abs(axis[lo] - v)) return lo - 1;
    return lo;
  };
}

/** Nodes nearest to the requested cut line y = value. */
export function cutAlongY(frame: SnapshotFrame, name: string, value: number) {
  const y = column(frame.table, "y");
  const ys = uniqueSorted(y);
  let best = ys[0];
  for (const cand of ys) {
    if (Math.abs(cand - value) < Math.abs(best - value)) best = cand;
  }
  const x = column(frame.table, "x");
  const v = nodeValues(frame, name);
  const pts: Array<[number, number]> = [];
  for (let r = 0; r < frame.table.rows; r++) {
    if (y[r] === best) pts.push([x[r], v[r]]);
  }
  pts.sort((a, b) => a[0] - b[0]);
  return { row: best, points: pts };
}
