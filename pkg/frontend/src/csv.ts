/**
 * Minimal CSV reader for the simulation toolkit's numeric artifacts.
 *
 * Files are plain comma-separated text with a single header row and float
 * columns (the first column of orders.csv is a label).  Schema problems are
 * reported with the offending file and column so batch runs fail loudly.
 */

import { readFileSync } from "node:fs";

export interface Table {
  path: string;
  columns: string[];
  rows: number[][];
  labels: string[][];
}

export class SchemaError extends Error {}

export function readCsv(path: string): Table {
  const text = readFileSync(path, "utf8");
  const lines = text.split("\n").filter((line) => line.length > 0);
  if (lines.length === 0) {
    throw new SchemaError(`${path}: file is empty`);
  }
  const columns = lines[0].split(",").map((c) => c.trim());
  if (lines.length === 1) {
    throw new SchemaError(`${path}: no data rows below the header`);
  }
  const rows: number[][] = [];
  const labels: string[][] = [];
  for (let i = 1; i < lines.length; i++) {
    const cells = lines[i].split(",");
    if (cells.length !== columns.length) {
      throw new SchemaError(
        `${path}: row ${i} has ${cells.length} cells, header has ${columns.length}`,
      );
    }
    const row: number[] = [];
    const labelRow: string[] = [];
    for (let c = 0; c < cells.length; c++) {
      const value = Number(cells[c]);
      row.push(value);
      labelRow.push(cells[c]);
    }
    rows.push(row);
    labels.push(labelRow);
  }
  return { path, columns, rows, labels };
}

/** Column values by name; throws naming the file and the missing column. */
export function column(table: Table, name: string): number[] {
  const idx = table.columns.indexOf(name);
  if (idx < 0) {
    throw new SchemaError(
      `${table.path}: missing column "${name}" (have: ${table.columns.join(", ")})`,
    );
  }
  const values = table.rows.map((r) => r[idx]);
  for (let i = 0; i < values.length; i++) {
    if (!Number.isFinite(values[i])) {
      throw new SchemaError(
        `${table.path}: column "${name}" row ${i + 1} is not a finite number`,
      );
    }
  }
  return values;
}

/** All columns whose names match a prefix, in header order. */
export function columnsWithPrefix(table: Table, prefix: string): { name: string; values: number[] }[] {
  const out: { name: string; values: number[] }[] = [];
  for (const name of table.columns) {
    if (name.startsWith(prefix)) {
      out.push({ name, values: column(table, name) });
    }
  }
  if (out.length === 0) {
    throw new SchemaError(`${table.path}: no columns start with "${prefix}"`);
  }
  return out;
}
