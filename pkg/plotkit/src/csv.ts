// CSV ingestion for rdvsim outputs: a header row of column names followed by
// numeric rows. Column lookups fail loudly with every missing name so a
// truncated or foreign file is diagnosed in one pass.
import * as fs from 'node:fs';

export interface Table {
  columns: string[];
  rows: number[][];
}

export class MissingColumnsError extends Error {
  readonly missing: string[];

  constructor(missing: string[], available: string[]) {
    super(
      `missing column${missing.length > 1 ? 's' : ''}: ${missing.join(', ')} ` +
      `(file has ${available.length} columns: ${available.slice(0, 8).join(', ')}` +
      `${available.length > 8 ? ', ...' : ''})`,
    );
    this.missing = missing;
  }
}

export function parseCsv(text: string): Table {
  const lines = text.split('\n').filter((l) => l.trim().length > 0);
  if (lines.length === 0) {
    throw new Error('empty file: no header row');
  }
  const columns = lines[0].split(',').map((c) => c.trim());
  if (lines.length === 1) {
    throw new Error('no data rows (header only)');
  }
  const rows: number[][] = [];
  for (let i = 1; i < lines.length; i++) {
    const parts = lines[i].split(',');
    if (parts.length !== columns.length) {
      throw new Error(`row ${i} has ${parts.length} fields, header has ${columns.length}`);
    }
    const row = parts.map(Number);
    const bad = row.findIndex((v) => Number.isNaN(v));
    if (bad >= 0) {
      throw new Error(`row ${i}, column ${columns[bad]}: not a number (${parts[bad]})`);
    }
    rows.push(row);
  }
  return { columns, rows };
}

export function readCsvFile(path: string): Table {
  return parseCsv(fs.readFileSync(path, 'utf8'));
}

/** Indices of the named columns; throws listing every missing name. */
export function requireColumns(table: Table, names: string[]): number[] {
  const index = new Map(table.columns.map((c, i) => [c, i] as const));
  const missing = names.filter((n) => !index.has(n));
  if (missing.length > 0) {
    throw new MissingColumnsError(missing, table.columns);
  }
  return names.map((n) => index.get(n)!);
}

export function column(table: Table, name: string): number[] {
  const [idx] = requireColumns(table, [name]);
  return table.rows.map((r) => r[idx]);
}

/** Number of vehicles encoded in a trajectory header (x1..xN present). */
export function vehicleCount(table: Table): number {
  let n = 0;
  const have = new Set(table.columns);
  while (have.has(`x${n + 1}`) && have.has(`y${n + 1}`) && have.has(`z${n + 1}`)) {
    n += 1;
  }
  if (n === 0) {
    throw new MissingColumnsError(['x1', 'y1', 'z1'], table.columns);
  }
  return n;
}
