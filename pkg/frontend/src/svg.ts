/**
 * SVG backend. Output is plain text with fixed two-decimal coordinates,
 * so a given figure always serializes to the same bytes.
 */
import { Figure } from "./figures.js";
import { Frame, layoutFigure } from "./layout.js";

export const PALETTE: ReadonlyArray<readonly [number, number, number]> = [
  [31, 119, 180],
  [214, 39, 40],
  [44, 160, 44],
  [148, 103, 189],
  [140, 86, 75],
  [227, 119, 194],
];

export function paletteHex(index: number): string {
  const [r, g, b] = PALETTE[index % PALETTE.length]!;
  const hex = (v: number) => v.toString(16).padStart(2, "0");
  return `#${hex(r)}${hex(g)}${hex(b)}`;
}

const px = (v: number) => v.toFixed(2);

function escapeText(s: string): string {
  return s
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;");
}

function text(
  x: number,
  y: number,
  s: string,
  anchor: "start" | "middle" | "end",
  size = 12,
): string {
  return (
    `<text x="${px(x)}" y="${px(y)}" font-family="monospace" ` +
    `font-size="${size}" text-anchor="${anchor}">${escapeText(s)}</text>`
  );
}

function axes(fig: Figure, frame: Frame): string[] {
  const parts: string[] = [];
  for (const tick of frame.yTicks) {
    parts.push(
      `<line x1="${px(frame.left)}" y1="${px(tick.px)}" x2="${px(frame.right)}" ` +
        `y2="${px(tick.px)}" stroke="#dddddd" stroke-width="1"/>`,
    );
    parts.push(text(frame.left - 8, tick.px + 4, tick.label, "end"));
  }
  for (const tick of frame.xTicks) {
    parts.push(
      `<line x1="${px(tick.px)}" y1="${px(frame.bottom)}" x2="${px(tick.px)}" ` +
        `y2="${px(frame.bottom + 5)}" stroke="#000000" stroke-width="1"/>`,
    );
    parts.push(text(tick.px, frame.bottom + 20, tick.label, "middle"));
  }
  parts.push(
    `<rect x="${px(frame.left)}" y="${px(frame.top)}" ` +
      `width="${px(frame.right - frame.left)}" ` +
      `height="${px(frame.bottom - frame.top)}" ` +
      `fill="none" stroke="#000000" stroke-width="1"/>`,
  );
  parts.push(text((frame.left + frame.right) / 2, frame.height - 12, fig.xLabel, "middle"));
  parts.push(
    `<text x="${px(16)}" y="${px((frame.top + frame.bottom) / 2)}" ` +
      `font-family="monospace" font-size="12" text-anchor="middle" ` +
      `transform="rotate(-90 16 ${px((frame.top + frame.bottom) / 2)})">` +
      `${escapeText(fig.yLabel)}</text>`,
  );
  parts.push(text((frame.left + frame.right) / 2, 24, fig.title, "middle", 14));
  return parts;
}

function legend(labels: string[], frame: Frame): string[] {
  const parts: string[] = [];
  labels.forEach((label, i) => {
    const y = frame.top + 16 + 18 * i;
    const x = frame.right - 150;
    parts.push(
      `<line x1="${px(x)}" y1="${px(y - 4)}" x2="${px(x + 24)}" y2="${px(y - 4)}" ` +
        `stroke="${paletteHex(i)}" stroke-width="2"/>`,
    );
    parts.push(text(x + 30, y, label, "start"));
  });
  return parts;
}

export function renderSvg(fig: Figure, width = 800, height = 500): string {
  const frame = layoutFigure(fig, width, height);
  const parts: string[] = [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" ` +
      `height="${height}" viewBox="0 0 ${width} ${height}">`,
    `<rect x="0" y="0" width="${width}" height="${height}" fill="#ffffff"/>`,
    ...axes(fig, frame),
  ];
  fig.lines.forEach((series, i) => {
    const pts = series.points
      .map(([x, y]) => `${px(frame.mapX(x))},${px(frame.mapY(y))}`)
      .join(" ");
    parts.push(
      `<polyline points="${pts}" fill="none" stroke="${paletteHex(i)}" ` +
        `stroke-width="2"/>`,
    );
    for (const [x, y] of series.points) {
      parts.push(
        `<circle cx="${px(frame.mapX(x))}" cy="${px(frame.mapY(y))}" r="3" ` +
          `fill="${paletteHex(i)}"/>`,
      );
    }
  });
  if (fig.bars.length > 0) {
    const slotW = (frame.right - frame.left) / Math.max(1, fig.categories.length);
    const barW = (0.8 * slotW) / fig.bars.length;
    fig.bars.forEach((series, i) => {
      series.values.forEach((value, j) => {
        const x = frame.slots[j]! - 0.4 * slotW + i * barW;
        const y = frame.mapY(value);
        parts.push(
          `<rect x="${px(x)}" y="${px(y)}" width="${px(barW)}" ` +
            `height="${px(frame.bottom - y)}" fill="${paletteHex(i)}"/>`,
        );
      });
    });
  }
  const labels = (fig.lines.length > 0 ? fig.lines : fig.bars).map(
    (s) => s.label,
  );
  parts.push(...legend(labels, frame));
  parts.push("</svg>");
  return parts.join("\n") + "\n";
}
