/** Minimal CSV reading with schema validation.
 *
 * Snapshot files are plain numeric CSVs with a header row; the schema is
 * the solver's documented contract (x, y, rho, u, v, p, T, z_1..z_M).
 * Missing columns fail with a diagnostic naming the column.
 */

export interface Table {
  columns: string[];
  /** column-major numeric data, data[c][r] */
  data: number[][];
  rows: number;
}

export class SchemaError extends Error {}

export function parseCsv(text: string): Table {
  const lines = text.split(/\r?\n/).filter((l) => l.trim().length > 0);
  if (lines.length === 0) {
    throw new SchemaError("empty CSV: no header row");
  }
  const columns = lines[0].split(",").map((c) => c.trim());
  const data: number[][] = columns.map(() => new Array(lines.length - 1));
  for (let r = 1; r < lines.length; r++) {
    const parts = lines[r].split(",");
    if (parts.length !== columns.length) {
      throw new SchemaError(
        `row ${r} has ${parts.length} fields, header has ${columns.length}`,
      );
    }
    for (let c = 0; c < columns.length; c++) {
      data[c][r - 1] = Number(parts[c]);
    }
  }
  return { columns, data, rows: lines.length - 1 };
}

export function column(table: Table, name: string): number[] {
  const idx = table.columns.indexOf(name);
  if (idx < 0) {
    throw new SchemaError(
      `snapshot is missing required column '${name}' (have: ${table.columns.join(", ")})`,
    );
  }
  return table.data[idx];
}

export function speciesColumns(table: Table): string[] {
  return table.columns.filter((c) => /^z_\d+$/.test(c));
}
