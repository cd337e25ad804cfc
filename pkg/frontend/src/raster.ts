/**
 * Tiny RGBA software canvas: Bresenham lines, filled rectangles, and
 * bitmap text. Everything is integer pixel work, so a given draw
 * sequence always produces the same buffer.
 */
import { GLYPH_HEIGHT, GLYPH_WIDTH, glyph } from "./font.js";

export type Color = readonly [number, number, number, number];

export const BLACK: Color = [0, 0, 0, 255];
export const WHITE: Color = [255, 255, 255, 255];
export const GRID_GRAY: Color = [221, 221, 221, 255];

export class Canvas {
  readonly width: number;
  readonly height: number;
  readonly data: Uint8Array;

  constructor(width: number, height: number, background: Color = WHITE) {
    this.width = width;
    this.height = height;
    this.data = new Uint8Array(width * height * 4);
    for (let i = 0; i < width * height; i += 1) {
      this.data.set(background, i * 4);
    }
  }

  set(x: number, y: number, color: Color): void {
    const xi = Math.round(x);
    const yi = Math.round(y);
    if (xi < 0 || xi >= this.width || yi < 0 || yi >= this.height) {
      return;
    }
    this.data.set(color, (yi * this.width + xi) * 4);
  }

  line(x0: number, y0: number, x1: number, y1: number, color: Color): void {
    let xa = Math.round(x0);
    let ya = Math.round(y0);
    const xb = Math.round(x1);
    const yb = Math.round(y1);
    const dx = Math.abs(xb - xa);
    const dy = -Math.abs(yb - ya);
    const sx = xa < xb ? 1 : -1;
    const sy = ya < yb ? 1 : -1;
    let err = dx + dy;
    for (;;) {
      this.set(xa, ya, color);
      if (xa === xb && ya === yb) {
        break;
      }
      const e2 = 2 * err;
      if (e2 >= dy) {
        err += dy;
        xa += sx;
      }
      if (e2 <= dx) {
        err += dx;
        ya += sy;
      }
    }
  }

  /** Axis-aligned 3x3 dot marker. */
  marker(x: number, y: number, color: Color): void {
    for (let dy = -1; dy <= 1; dy += 1) {
      for (let dx = -1; dx <= 1; dx += 1) {
        this.set(x + dx, y + dy, color);
      }
    }
  }

  rect(x: number, y: number, w: number, h: number, color: Color): void {
    const x0 = Math.round(x);
    const y0 = Math.round(y);
    for (let yi = y0; yi < y0 + Math.round(h); yi += 1) {
      for (let xi = x0; xi < x0 + Math.round(w); xi += 1) {
        this.set(xi, yi, color);
      }
    }
  }

  frame(x: number, y: number, w: number, h: number, color: Color): void {
    this.line(x, y, x + w, y, color);
    this.line(x, y + h, x + w, y + h, color);
    this.line(x, y, x, y + h, color);
    this.line(x + w, y, x + w, y + h, color);
  }

  /** Draw s with its top-left corner at (x, y); 6 px advance per char. */
  text(x: number, y: number, s: string, color: Color): void {
    let cx = Math.round(x);
    const cy = Math.round(y);
    for (const ch of s) {
      const rows = glyph(ch);
      for (let r = 0; r < GLYPH_HEIGHT; r += 1) {
        for (let c = 0; c < GLYPH_WIDTH; c += 1) {
          if (rows[r]![c] === "1") {
            this.set(cx + c, cy + r, color);
          }
        }
      }
      cx += GLYPH_WIDTH + 1;
    }
  }

  textWidth(s: string): number {
    return s.length * (GLYPH_WIDTH + 1) - (s.length > 0 ? 1 : 0);
  }
}
