#!/usr/bin/env node
/**
 * Figure rendering entry point: library (`renderJob`) plus the CLI.
 *
 * Usage: mcbd-plots <result.csv> --kind fig1 --out trace.png [--format png|svg]
 * Exit codes: 0 rendered, 1 bad input or arguments, 2 file system error.
 */
import { readFileSync, writeFileSync } from "node:fs";
import { pathToFileURL } from "node:url";

import { CsvFormatError, parseResultCsv } from "./csv.js";
import { Figure, FigureError, buildFigure } from "./figures.js";
import { layoutFigure } from "./layout.js";
import { Canvas, BLACK, GRID_GRAY, Color } from "./raster.js";
import { encodePng } from "./png.js";
import { PALETTE, renderSvg } from "./svg.js";

export type ImageFormat = "png" | "svg";

export interface FigureJob {
  input: string;
  kind: string;
  output: string;
  format?: ImageFormat;
}

export class UsageError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "UsageError";
  }
}

function paletteColor(index: number): Color {
  const [r, g, b] = PALETTE[index % PALETTE.length]!;
  return [r, g, b, 255];
}

export function renderPng(fig: Figure, width = 800, height = 500): Buffer {
  const frame = layoutFigure(fig, width, height);
  const canvas = new Canvas(width, height);
  for (const tick of frame.yTicks) {
    canvas.line(frame.left, tick.px, frame.right, tick.px, GRID_GRAY);
    canvas.text(
      frame.left - 8 - canvas.textWidth(tick.label),
      tick.px - 3,
      tick.label,
      BLACK,
    );
  }
  for (const tick of frame.xTicks) {
    canvas.line(tick.px, frame.bottom, tick.px, frame.bottom + 5, BLACK);
    canvas.text(
      tick.px - canvas.textWidth(tick.label) / 2,
      frame.bottom + 10,
      tick.label,
      BLACK,
    );
  }
  canvas.frame(
    frame.left,
    frame.top,
    frame.right - frame.left,
    frame.bottom - frame.top,
    BLACK,
  );
  const centerX = (frame.left + frame.right) / 2;
  canvas.text(centerX - canvas.textWidth(fig.title) / 2, 10, fig.title, BLACK);
  canvas.text(6, frame.top - 14, fig.yLabel, BLACK);
  canvas.text(
    centerX - canvas.textWidth(fig.xLabel) / 2,
    frame.height - 20,
    fig.xLabel,
    BLACK,
  );
  fig.lines.forEach((series, i) => {
    const color = paletteColor(i);
    for (let p = 1; p < series.points.length; p += 1) {
      const [x0, y0] = series.points[p - 1]!;
      const [x1, y1] = series.points[p]!;
      canvas.line(frame.mapX(x0), frame.mapY(y0), frame.mapX(x1), frame.mapY(y1), color);
    }
    for (const [x, y] of series.points) {
      canvas.marker(frame.mapX(x), frame.mapY(y), color);
    }
  });
  if (fig.bars.length > 0) {
    const slotW = (frame.right - frame.left) / Math.max(1, fig.categories.length);
    const barW = (0.8 * slotW) / fig.bars.length;
    fig.bars.forEach((series, i) => {
      series.values.forEach((value, j) => {
        const x = frame.slots[j]! - 0.4 * slotW + i * barW;
        const y = frame.mapY(value);
        canvas.rect(x, y, barW, frame.bottom - y, paletteColor(i));
      });
    });
  }
  const labels = (fig.lines.length > 0 ? fig.lines : fig.bars).map((s) => s.label);
  labels.forEach((label, i) => {
    const y = frame.top + 10 + 14 * i;
    const x = frame.right - 150;
    canvas.line(x, y + 3, x + 20, y + 3, paletteColor(i));
    canvas.text(x + 26, y, label, BLACK);
  });
  return encodePng(width, height, canvas.data);
}

function jobFormat(job: FigureJob): ImageFormat {
  const format = job.format ?? (job.output.endsWith(".svg") ? "svg" : "png");
  if (format !== "png" && format !== "svg") {
    throw new UsageError(`unknown format '${format}' (expected png or svg)`);
  }
  return format;
}

export function renderJob(job: FigureJob): void {
  const format = jobFormat(job);
  const table = parseResultCsv(readFileSync(job.input, "utf8"));
  const figure = buildFigure(job.kind, table);
  if (format === "svg") {
    writeFileSync(job.output, renderSvg(figure), "utf8");
  } else {
    writeFileSync(job.output, renderPng(figure));
  }
}

const USAGE =
  "usage: mcbd-plots <result.csv> --kind <fig1|fig2|fig3|fig4> " +
  "--out <path> [--format png|svg]";

function parseArgs(argv: string[]): FigureJob {
  let input: string | undefined;
  let kind: string | undefined;
  let output: string | undefined;
  let format: string | undefined;
  for (let i = 0; i < argv.length; i += 1) {
    const arg = argv[i]!;
    const takeValue = (name: string): string => {
      const value = argv[i + 1];
      if (value === undefined) {
        throw new UsageError(`${name} needs a value`);
      }
      i += 1;
      return value;
    };
    if (arg === "--kind") {
      kind = takeValue(arg);
    } else if (arg === "--out") {
      output = takeValue(arg);
    } else if (arg === "--format") {
      format = takeValue(arg);
    } else if (arg.startsWith("--")) {
      throw new UsageError(`unknown flag '${arg}'`);
    } else if (input === undefined) {
      input = arg;
    } else {
      throw new UsageError(`unexpected argument '${arg}'`);
    }
  }
  if (input === undefined || kind === undefined || output === undefined) {
    throw new UsageError(USAGE);
  }
  return { input, kind, output, format: format as ImageFormat | undefined };
}

export function main(argv: string[]): number {
  let job: FigureJob;
  try {
    job = parseArgs(argv);
    renderJob(job);
  } catch (err) {
    if (
      err instanceof UsageError ||
      err instanceof FigureError ||
      err instanceof CsvFormatError
    ) {
      console.error(`mcbd-plots: error: ${err.message}`);
      return 1;
    }
    if (err instanceof Error && "code" in err) {
      console.error(`mcbd-plots: error: ${err.message}`);
      return 2;
    }
    throw err;
  }
  console.log(`wrote ${job.output}`);
  return 0;
}

if (
  process.argv[1] !== undefined &&
  import.meta.url === pathToFileURL(process.argv[1]).href
) {
  process.exit(main(process.argv.slice(2)));
}
