/**
 * Deterministic chart geometry shared by the SVG and raster backends:
 * axis ranges, tick positions, and the data-to-pixel maps.
 */
import { Figure } from "./figures.js";

export interface Tick {
  px: number;
  label: string;
}

export interface Frame {
  width: number;
  height: number;
  left: number;
  right: number;
  top: number;
  bottom: number;
  xTicks: Tick[];
  yTicks: Tick[];
  mapX: (v: number) => number;
  mapY: (v: number) => number;
  /** Pixel centers of histogram categories, aligned with figure.categories. */
  slots: number[];
}

export function fmtNumber(v: number): string {
  if (v === 0) {
    return "0";
  }
  return String(Number(v.toPrecision(6)));
}

/** Round tick spacing to 1, 2, or 5 times a power of ten. */
function niceStep(span: number, count: number): number {
  const raw = span / Math.max(1, count);
  const mag = Math.pow(10, Math.floor(Math.log10(raw)));
  const unit = raw / mag;
  if (unit <= 1) {
    return mag;
  }
  if (unit <= 2) {
    return 2 * mag;
  }
  if (unit <= 5) {
    return 5 * mag;
  }
  return 10 * mag;
}

function linearTicks(lo: number, hi: number, count: number): number[] {
  const step = niceStep(hi - lo, count);
  const first = Math.ceil(lo / step) * step;
  const ticks: number[] = [];
  for (let v = first; v <= hi + 1e-9 * step; v += step) {
    // snap values like 0.30000000000000004 back onto the grid
    ticks.push(Number(v.toPrecision(12)));
  }
  return ticks;
}

function dataRange(values: number[]): [number, number] {
  let lo = Math.min(...values);
  let hi = Math.max(...values);
  if (lo === hi) {
    lo -= 1;
    hi += 1;
  }
  const pad = 0.05 * (hi - lo);
  return [lo - pad, hi + pad];
}

export function layoutFigure(fig: Figure, width = 800, height = 500): Frame {
  const left = 70;
  const right = width - 25;
  const top = 40;
  const bottom = height - 50;

  const isBars = fig.bars.length > 0;
  const ys = isBars
    ? fig.bars.flatMap((b) => b.values)
    : fig.lines.flatMap((s) => s.points.map((p) => p[1]));
  let [yLo, yHi] = dataRange(ys);
  if (isBars) {
    yLo = 0;
  }
  const mapY = (v: number) => bottom - ((v - yLo) / (yHi - yLo)) * (bottom - top);
  const yTicks = linearTicks(yLo, yHi, 6).map((v) => ({
    px: mapY(v),
    label: fmtNumber(v),
  }));

  if (isBars) {
    const n = fig.categories.length;
    const slotW = (right - left) / Math.max(1, n);
    const slots = fig.categories.map((_, i) => left + (i + 0.5) * slotW);
    const xTicks = fig.categories.map((label, i) => ({ px: slots[i]!, label }));
    return {
      width,
      height,
      left,
      right,
      top,
      bottom,
      xTicks,
      yTicks,
      mapX: (v: number) => left + (v + 0.5) * slotW,
      mapY,
      slots,
    };
  }

  const rawXs = fig.lines.flatMap((s) => s.points.map((p) => p[0]));
  const toAxis = fig.logX ? Math.log10 : (v: number) => v;
  const [xLo, xHi] = fig.logX
    ? [Math.min(...rawXs.map(toAxis)), Math.max(...rawXs.map(toAxis))]
    : dataRange(rawXs);
  const spanLo = xLo === xHi ? xLo - 1 : xLo;
  const spanHi = xLo === xHi ? xHi + 1 : xHi;
  const mapX = (v: number) =>
    left + ((toAxis(v) - spanLo) / (spanHi - spanLo)) * (right - left);
  let xTickValues: number[];
  if (fig.logX) {
    xTickValues = [];
    for (let e = Math.ceil(spanLo); e <= Math.floor(spanHi); e += 1) {
      xTickValues.push(Math.pow(10, e));
    }
  } else {
    xTickValues = linearTicks(spanLo, spanHi, 8);
  }
  const xTicks = xTickValues.map((v) => ({ px: mapX(v), label: fmtNumber(v) }));
  return {
    width,
    height,
    left,
    right,
    top,
    bottom,
    xTicks,
    yTicks,
    mapX,
    mapY,
    slots: [],
  };
}
