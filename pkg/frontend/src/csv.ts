/**
 * Reader for the experiment result files written by the mcbd CLI.
 *
 * The format is one comment line of space-separated key=value metadata,
 * a comma-separated header, then comma-separated data rows. Cells stay
 * strings here; figure builders convert the columns they need.
 */

export interface ResultTable {
  meta: Record<string, string>;
  columns: string[];
  rows: string[][];
}

export class CsvFormatError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "CsvFormatError";
  }
}

export function parseResultCsv(text: string): ResultTable {
  const lines = text.split(/\r?\n/);
  while (lines.length > 0 && lines[lines.length - 1] === "") {
    lines.pop();
  }
  if (lines.length === 0) {
    throw new CsvFormatError("empty file");
  }
  const head = lines[0]!;
  if (!head.startsWith("# ")) {
    throw new CsvFormatError("missing '# key=value ...' metadata line");
  }
  const meta: Record<string, string> = {};
  for (const token of head.slice(2).split(" ")) {
    if (token === "") {
      continue;
    }
    const eq = token.indexOf("=");
    if (eq <= 0) {
      throw new CsvFormatError(`malformed metadata token '${token}'`);
    }
    meta[token.slice(0, eq)] = token.slice(eq + 1);
  }
  if (lines.length < 2 || lines[1] === "") {
    throw new CsvFormatError("missing header line");
  }
  const columns = lines[1]!.split(",");
  if (columns.some((name) => name === "")) {
    throw new CsvFormatError("blank column name in header");
  }
  const rows: string[][] = [];
  for (let i = 2; i < lines.length; i += 1) {
    const cells = lines[i]!.split(",");
    if (cells.length !== columns.length) {
      throw new CsvFormatError(
        `row ${i - 1} has ${cells.length} cells, expected ${columns.length}`,
      );
    }
    rows.push(cells);
  }
  if (rows.length === 0) {
    throw new CsvFormatError("no data rows");
  }
  return { meta, columns, rows };
}

export function requireColumns(table: ResultTable, names: string[]): void {
  const missing = names.filter((name) => !table.columns.includes(name));
  if (missing.length > 0) {
    throw new CsvFormatError(`missing columns: ${missing.join(", ")}`);
  }
}

export function numericColumn(table: ResultTable, name: string): number[] {
  const idx = table.columns.indexOf(name);
  if (idx < 0) {
    throw new CsvFormatError(`missing columns: ${name}`);
  }
  return table.rows.map((row, i) => {
    const value = Number(row[idx]);
    if (!Number.isFinite(value)) {
      throw new CsvFormatError(
        `column '${name}' row ${i + 1}: '${row[idx]}' is not a number`,
      );
    }
    return value;
  });
}
