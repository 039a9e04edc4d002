/**
 * Minimal deterministic SVG plotting: fixed canvas, fixed styles, fixed
 * number formatting. Same inputs always produce the same bytes.
 */

export interface Viewport {
  x0: number;
  x1: number;
  y0: number;
  y1: number;
  logX?: boolean;
  logY?: boolean;
}

export interface PanelRect {
  left: number;
  top: number;
  width: number;
  height: number;
}

const COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

export function color(i: number): string {
  return COLORS[i % COLORS.length] ?? "#000000";
}

export function fmt(x: number): string {
  if (!Number.isFinite(x)) return "0";
  return Number(x.toPrecision(6)).toString();
}

export class Panel {
  private readonly rect: PanelRect;
  private readonly view: Viewport;

  constructor(rect: PanelRect, view: Viewport) {
    this.rect = rect;
    this.view = view;
  }

  private tx(x: number): number {
    const v = this.view;
    const u = v.logX ? Math.log10(x) : x;
    const a = v.logX ? Math.log10(v.x0) : v.x0;
    const b = v.logX ? Math.log10(v.x1) : v.x1;
    return this.rect.left + ((u - a) / (b - a)) * this.rect.width;
  }

  private ty(y: number): number {
    const v = this.view;
    const u = v.logY ? Math.log10(y) : y;
    const a = v.logY ? Math.log10(v.y0) : v.y0;
    const b = v.logY ? Math.log10(v.y1) : v.y1;
    return this.rect.top + this.rect.height - ((u - a) / (b - a)) * this.rect.height;
  }

  frame(title: string, xLabel: string, yLabel: string): string {
    const r = this.rect;
    const parts = [
      `<rect x="${fmt(r.left)}" y="${fmt(r.top)}" width="${fmt(r.width)}" height="${fmt(r.height)}" fill="none" stroke="#333333" stroke-width="1"/>`,
      `<text x="${fmt(r.left + r.width / 2)}" y="${fmt(r.top - 8)}" text-anchor="middle" font-size="13" fill="#111111">${title}</text>`,
      `<text x="${fmt(r.left + r.width / 2)}" y="${fmt(r.top + r.height + 30)}" text-anchor="middle" font-size="11" fill="#111111">${xLabel}</text>`,
      `<text x="${fmt(r.left - 42)}" y="${fmt(r.top + r.height / 2)}" text-anchor="middle" font-size="11" fill="#111111" transform="rotate(-90 ${fmt(r.left - 42)} ${fmt(r.top + r.height / 2)})">${yLabel}</text>`,
    ];
    return parts.join("\n");
  }

  ticks(nx = 5, ny = 5): string {
    const parts: string[] = [];
    const v = this.view;
    for (let i = 0; i <= nx; i++) {
      const u = v.logX
        ? Math.pow(10, Math.log10(v.x0) + (i / nx) * (Math.log10(v.x1) - Math.log10(v.x0)))
        : v.x0 + (i / nx) * (v.x1 - v.x0);
      const px = this.tx(u);
      parts.push(
        `<line x1="${fmt(px)}" y1="${fmt(this.rect.top + this.rect.height)}" x2="${fmt(px)}" y2="${fmt(this.rect.top + this.rect.height + 4)}" stroke="#333333" stroke-width="1"/>`,
        `<text x="${fmt(px)}" y="${fmt(this.rect.top + this.rect.height + 16)}" text-anchor="middle" font-size="10" fill="#333333">${fmt(u)}</text>`,
      );
    }
    for (let i = 0; i <= ny; i++) {
      const u = v.logY
        ? Math.pow(10, Math.log10(v.y0) + (i / ny) * (Math.log10(v.y1) - Math.log10(v.y0)))
        : v.y0 + (i / ny) * (v.y1 - v.y0);
      const py = this.ty(u);
      parts.push(
        `<line x1="${fmt(this.rect.left - 4)}" y1="${fmt(py)}" x2="${fmt(this.rect.left)}" y2="${fmt(py)}" stroke="#333333" stroke-width="1"/>`,
        `<text x="${fmt(this.rect.left - 7)}" y="${fmt(py + 3)}" text-anchor="end" font-size="10" fill="#333333">${fmt(u)}</text>`,
      );
    }
    return parts.join("\n");
  }

  polyline(xs: number[], ys: number[], stroke: string, dash = ""): string {
    const pts: string[] = [];
    for (let i = 0; i < xs.length; i++) {
      const x = xs[i]!;
      const y = ys[i]!;
      if (this.view.logX && x <= 0) continue;
      if (this.view.logY && y <= 0) continue;
      pts.push(`${fmt(this.tx(x))},${fmt(this.ty(y))}`);
    }
    const dashAttr = dash ? ` stroke-dasharray="${dash}"` : "";
    return `<polyline points="${pts.join(" ")}" fill="none" stroke="${stroke}" stroke-width="1.5"${dashAttr}/>`;
  }

  markers(xs: number[], ys: number[], stroke: string, shape: "circle" | "cross" | "square" = "circle"): string {
    const parts: string[] = [];
    for (let i = 0; i < xs.length; i++) {
      const px = this.tx(xs[i]!);
      const py = this.ty(ys[i]!);
      if (shape === "circle") {
        parts.push(`<circle cx="${fmt(px)}" cy="${fmt(py)}" r="3.5" fill="none" stroke="${stroke}" stroke-width="1.5"/>`);
      } else if (shape === "square") {
        parts.push(`<rect x="${fmt(px - 3)}" y="${fmt(py - 3)}" width="6" height="6" fill="none" stroke="${stroke}" stroke-width="1.5"/>`);
      } else {
        parts.push(
          `<line x1="${fmt(px - 3.5)}" y1="${fmt(py - 3.5)}" x2="${fmt(px + 3.5)}" y2="${fmt(py + 3.5)}" stroke="${stroke}" stroke-width="1.5"/>`,
          `<line x1="${fmt(px - 3.5)}" y1="${fmt(py + 3.5)}" x2="${fmt(px + 3.5)}" y2="${fmt(py - 3.5)}" stroke="${stroke}" stroke-width="1.5"/>`,
        );
      }
    }
    return parts.join("\n");
  }

  vline(x: number, stroke: string, dash = "4 3"): string {
    const px = this.tx(x);
    return `<line x1="${fmt(px)}" y1="${fmt(this.rect.top)}" x2="${fmt(px)}" y2="${fmt(this.rect.top + this.rect.height)}" stroke="${stroke}" stroke-width="1" stroke-dasharray="${dash}"/>`;
  }

  label(x: number, y: number, text: string, fill: string): string {
    return `<text x="${fmt(this.tx(x))}" y="${fmt(this.ty(y))}" font-size="10" fill="${fill}">${text}</text>`;
  }
}

export function legend(x: number, y: number, entries: [string, string][]): string {
  const parts: string[] = [];
  entries.forEach(([name, stroke], i) => {
    const yy = y + 14 * i;
    parts.push(
      `<line x1="${fmt(x)}" y1="${fmt(yy - 3)}" x2="${fmt(x + 18)}" y2="${fmt(yy - 3)}" stroke="${stroke}" stroke-width="1.5"/>`,
      `<text x="${fmt(x + 23)}" y="${fmt(yy)}" font-size="10" fill="#111111">${name}</text>`,
    );
  });
  return parts.join("\n");
}

export function document(width: number, height: number, body: string[]): string {
  return [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" viewBox="0 0 ${width} ${height}">`,
    `<rect width="${width}" height="${height}" fill="#ffffff"/>`,
    ...body,
    "</svg>",
    "",
  ].join("\n");
}

export function bounds(values: number[], pad = 0.06, log = false): [number, number] {
  const finite = values.filter((v) => Number.isFinite(v) && (!log || v > 0));
  if (finite.length === 0) return log ? [0.1, 10] : [0, 1];
  let lo = Math.min(...finite);
  let hi = Math.max(...finite);
  if (log) {
    const la = Math.log10(lo);
    const lb = Math.log10(hi);
    const d = Math.max(lb - la, 0.2) * pad;
    return [Math.pow(10, la - d), Math.pow(10, lb + d)];
  }
  const d = Math.max(hi - lo, Math.abs(hi) * 1e-6, 1e-12) * pad;
  return [lo - d, hi + d];
}
