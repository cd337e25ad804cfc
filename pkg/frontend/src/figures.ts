/**
 * Turns a parsed result table into an abstract figure: labeled line
 * series or grouped histogram bars plus axis captions. Rendering to a
 * concrete format lives in svg.ts and raster.ts.
 */
import { ResultTable, numericColumn, requireColumns } from "./csv.js";

export const FIGURE_KINDS = [
  "fig1_convergence",
  "fig2_miso_sweep",
  "fig3_active_histogram",
  "fig4_mimo_power_sweep",
] as const;

export type FigureKind = (typeof FIGURE_KINDS)[number];

const SHORT_NAMES: Record<string, FigureKind> = {
  fig1: "fig1_convergence",
  fig2: "fig2_miso_sweep",
  fig3: "fig3_active_histogram",
  fig4: "fig4_mimo_power_sweep",
};

export class FigureError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "FigureError";
  }
}

export function canonicalKind(name: string): FigureKind {
  const short = SHORT_NAMES[name];
  if (short !== undefined) {
    return short;
  }
  if ((FIGURE_KINDS as readonly string[]).includes(name)) {
    return name as FigureKind;
  }
  throw new FigureError(
    `unknown figure kind '${name}' (expected one of ${FIGURE_KINDS.join(", ")})`,
  );
}

export interface LineSeries {
  label: string;
  points: Array<[number, number]>;
}

export interface BarSeries {
  label: string;
  values: number[];
}

export interface Figure {
  kind: FigureKind;
  title: string;
  xLabel: string;
  yLabel: string;
  logX: boolean;
  lines: LineSeries[];
  /** Histogram category labels; empty for line figures. */
  categories: string[];
  bars: BarSeries[];
}

function rateUnit(table: ResultTable): string {
  return table.meta["rates"] ?? "nats";
}

function checkExperiment(kind: FigureKind, table: ResultTable): void {
  const tag = table.meta["experiment"];
  if (tag === undefined) {
    throw new FigureError("metadata line has no experiment tag");
  }
  if (tag !== kind) {
    throw new FigureError(`csv holds experiment '${tag}', not '${kind}'`);
  }
}

function zip(xs: number[], ys: number[]): Array<[number, number]> {
  return xs.map((x, i) => [x, ys[i]!]);
}

function convergenceFigure(table: ResultTable): Figure {
  requireColumns(table, ["iteration", "weighted_sum_rate"]);
  const powerColumns = table.columns.filter((c) => c.startsWith("power_"));
  if (powerColumns.length === 0) {
    throw new FigureError("missing columns: power_*");
  }
  const iterations = numericColumn(table, "iteration");
  const lines: LineSeries[] = [
    {
      label: "weighted sum rate",
      points: zip(iterations, numericColumn(table, "weighted_sum_rate")),
    },
  ];
  for (const name of powerColumns) {
    lines.push({
      label: name.replace(/_/g, " "),
      points: zip(iterations, numericColumn(table, name)),
    });
  }
  return {
    kind: "fig1_convergence",
    title: "Convergence trace",
    xLabel: "ellipsoid iteration",
    yLabel: `rate (${rateUnit(table)}) / power`,
    logX: false,
    lines,
    categories: [],
    bars: [],
  };
}

function methodLines(table: ResultTable, xColumn: string): LineSeries[] {
  requireColumns(table, [xColumn, "optimal_rate", "suboptimal_rate"]);
  const xs = numericColumn(table, xColumn);
  return [
    { label: "optimal", points: zip(xs, numericColumn(table, "optimal_rate")) },
    {
      label: "suboptimal",
      points: zip(xs, numericColumn(table, "suboptimal_rate")),
    },
  ];
}

function antennaSweepFigure(table: ResultTable): Figure {
  return {
    kind: "fig2_miso_sweep",
    title: "Sum rate vs transmit antennas",
    xLabel: "total transmit antennas",
    yLabel: `mean sum rate (${rateUnit(table)})`,
    logX: false,
    lines: methodLines(table, "num_antennas"),
    categories: [],
    bars: [],
  };
}

function histogramFigure(table: ResultTable): Figure {
  requireColumns(table, ["active_optimal", "active_suboptimal"]);
  const optimal = numericColumn(table, "active_optimal");
  const suboptimal = numericColumn(table, "active_suboptimal");
  const top = Math.max(0, ...optimal, ...suboptimal);
  const categories: string[] = [];
  for (let v = 0; v <= top; v += 1) {
    categories.push(String(v));
  }
  const count = (values: number[]) =>
    categories.map((c) => values.filter((v) => v === Number(c)).length);
  return {
    kind: "fig3_active_histogram",
    title: "Active power constraints",
    xLabel: "active constraints at the solution",
    yLabel: "seeds",
    logX: false,
    lines: [],
    categories,
    bars: [
      { label: "optimal", values: count(optimal) },
      { label: "suboptimal", values: count(suboptimal) },
    ],
  };
}

function powerSweepFigure(table: ResultTable): Figure {
  return {
    kind: "fig4_mimo_power_sweep",
    title: "Sum rate vs power budget",
    xLabel: "per-group power budget",
    yLabel: `mean sum rate (${rateUnit(table)})`,
    logX: true,
    lines: methodLines(table, "power"),
    categories: [],
    bars: [],
  };
}

const BUILDERS: Record<FigureKind, (table: ResultTable) => Figure> = {
  fig1_convergence: convergenceFigure,
  fig2_miso_sweep: antennaSweepFigure,
  fig3_active_histogram: histogramFigure,
  fig4_mimo_power_sweep: powerSweepFigure,
};

export function buildFigure(kind: string, table: ResultTable): Figure {
  const canonical = canonicalKind(kind);
  checkExperiment(canonical, table);
  return BUILDERS[canonical](table);
}
