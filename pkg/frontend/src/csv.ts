import Papa from "papaparse";

export type Row = Record<string, string>;

/** Parse a harness CSV: `#`-prefixed header comments, then a header row. */
export function parseCsv(text: string): Row[] {
  const result = Papa.parse<Row>(text, {
    header: true,
    comments: "#",
    skipEmptyLines: true,
  });
  if (result.errors.length > 0) {
    const first = result.errors[0];
    throw new Error(`CSV parse error: ${first.message} (row ${first.row})`);
  }
  return result.data;
}

/** Extract one column as numbers, failing loudly on absent columns. */
export function numericColumn(rows: Row[], name: string): number[] {
  requireColumns(rows, [name]);
  return rows.map((row) => Number(row[name]));
}

export function requireColumns(rows: Row[], names: string[]): void {
  if (rows.length === 0) {
    throw new Error("CSV has no data rows");
  }
  const present = new Set(Object.keys(rows[0]));
  const missing = names.filter((n) => !present.has(n));
  if (missing.length > 0) {
    throw new Error(`missing column(s): ${missing.join(", ")}`);
  }
}
