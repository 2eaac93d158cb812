import { test } from "node:test";
import assert from "node:assert/strict";
import { parseCsv, column, speciesColumns, SchemaError } from "../src/csv.js";

test("parses numeric csv column-major", () => {
  const t = parseCsv("a,b\n1,2\n3,4\n");
  assert.deepEqual(t.columns, ["a", "b"]);
  assert.equal(t.rows, 2);
  assert.deepEqual(column(t, "b"), [2, 4]);
});

test("missing column error names the column and lists the header", () => {
  const t = parseCsv("x,y,rho\n0,0,1\n");
  assert.throws(
    () => column(t, "p"),
    (err: Error) =>
      err instanceof SchemaError &&
      err.message.includes("'p'") &&
      err.message.includes("x, y, rho"),
  );
});

test("ragged rows rejected", () => {
  assert.throws(() => parseCsv("a,b\n1\n"), SchemaError);
});

test("species columns detected by pattern", () => {
  const t = parseCsv("x,z_1,z_2,zz\n0,0.5,0.5,9\n");
  assert.deepEqual(speciesColumns(t), ["z_1", "z_2"]);
});
