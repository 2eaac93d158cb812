/** Tiny deterministic SVG scene builder: fixed layout, no timestamps, so
 *  re-rendering identical inputs is byte-stable. */

export interface Extent {
  xmin: number;
  xmax: number;
  ymin: number;
  ymax: number;
}

const WIDTH = 640;
const HEIGHT = 480;
const MARGIN = { left: 64, right: 20, top: 36, bottom: 46 };

export class Figure {
  private parts: string[] = [];
  readonly plot = {
    x0: MARGIN.left,
    y0: MARGIN.top,
    w: WIDTH - MARGIN.left - MARGIN.right,
    h: HEIGHT - MARGIN.top - MARGIN.bottom,
  };

  constructor(private extent: Extent, title: string, xlabel = "x", ylabel = "") {
    this.parts.push(
      `<rect x="${this.plot.x0}" y="${this.plot.y0}" width="${this.plot.w}" height="${this.plot.h}" fill="white" stroke="#444"/>`,
    );
    this.text(WIDTH / 2, 20, title, 14, "middle");
    this.text(MARGIN.left + this.plot.w / 2, HEIGHT - 10, xlabel, 12, "middle");
    if (ylabel) {
      this.parts.push(
        `<text x="16" y="${MARGIN.top + this.plot.h / 2}" font-size="12" text-anchor="middle" transform="rotate(-90 16 ${MARGIN.top + this.plot.h / 2})" font-family="sans-serif">${escapeXml(ylabel)}</text>`,
      );
    }
    this.axes();
  }

  sx(x: number): number {
    const { xmin, xmax } = this.extent;
    return this.plot.x0 + ((x - xmin) / (xmax - xmin || 1)) * this.plot.w;
  }

  sy(y: number): number {
    const { ymin, ymax } = this.extent;
    return this.plot.y0 + this.plot.h - ((y - ymin) / (ymax - ymin || 1)) * this.plot.h;
  }

  private axes(): void {
    const { xmin, xmax, ymin, ymax } = this.extent;
    for (const t of ticks(xmin, xmax)) {
      const px = this.sx(t);
      this.parts.push(
        `<line x1="${fmt(px)}" y1="${this.plot.y0 + this.plot.h}" x2="${fmt(px)}" y2="${this.plot.y0 + this.plot.h + 5}" stroke="#444"/>`,
      );
      this.text(px, this.plot.y0 + this.plot.h + 18, fmtTick(t), 10, "middle");
    }
    for (const t of ticks(ymin, ymax)) {
      const py = this.sy(t);
      this.parts.push(
        `<line x1="${this.plot.x0 - 5}" y1="${fmt(py)}" x2="${this.plot.x0}" y2="${fmt(py)}" stroke="#444"/>`,
      );
      this.text(this.plot.x0 - 8, py + 3, fmtTick(t), 10, "end");
    }
  }

  text(x: number, y: number, s: string, size = 11, anchor = "start"): void {
    this.parts.push(
      `<text x="${fmt(x)}" y="${fmt(y)}" font-size="${size}" text-anchor="${anchor}" font-family="sans-serif">${escapeXml(s)}</text>`,
    );
  }

  polyline(points: Array<[number, number]>, color = "#1f5fa8", width = 1.5): void {
    if (points.length === 0) return;
    const attr = points.map(([x, y]) => `${fmt(this.sx(x))},${fmt(this.sy(y))}`).join(" ");
    this.parts.push(`<polyline points="${attr}" fill="none" stroke="${color}" stroke-width="${width}"/>`);
  }

  marker(x: number, y: number, color = "#1f5fa8"): void {
    this.parts.push(`<circle cx="${fmt(this.sx(x))}" cy="${fmt(this.sy(y))}" r="2.3" fill="${color}"/>`);
  }

  /** Filled cell in data coordinates (pcolor-style). */
  cell(x0: number, x1: number, y0: number, y1: number, color: string): void {
    const px = this.sx(x0);
    const py = this.sy(y1);
    const w = this.sx(x1) - px;
    const h = this.sy(y0) - py;
    this.parts.push(
      `<rect x="${fmt(px)}" y="${fmt(py)}" width="${fmt(Math.max(w, 0.1))}" height="${fmt(Math.max(h, 0.1))}" fill="${color}" stroke="none"/>`,
    );
  }

  segment(x0: number, y0: number, x1: number, y1: number, color = "#222", width = 1.0): void {
    this.parts.push(
      `<line x1="${fmt(this.sx(x0))}" y1="${fmt(this.sy(y0))}" x2="${fmt(this.sx(x1))}" y2="${fmt(this.sy(y1))}" stroke="${color}" stroke-width="${width}"/>`,
    );
  }

  render(): string {
    return (
      `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" viewBox="0 0 ${WIDTH} ${HEIGHT}">\n` +
      `<rect width="${WIDTH}" height="${HEIGHT}" fill="#fafafa"/>\n` +
      this.parts.join("\n") +
      "\n</svg>\n"
    );
  }
}

export function ticks(lo: number, hi: number, n = 6): number[] {
  if (!(hi > lo)) return [lo];
  const span = hi - lo;
  const step = niceStep(span / n);
  const start = Math.ceil(lo / step) * step;
  const out: number[] = [];
  for (let t = start; t <= hi + 1e-12 * span; t += step) {
    out.push(Math.abs(t) < 1e-12 * span ? 0 : t);
  }
  return out;
}

function niceStep(raw: number): number {
  const mag = Math.pow(10, Math.floor(Math.log10(raw)));
  const norm = raw / mag;
  if (norm <= 1) return mag;
  if (norm <= 2) return 2 * mag;
  if (norm <= 5) return 5 * mag;
  return 10 * mag;
}

function fmt(v: number): string {
  return v.toFixed(2);
}

function fmtTick(v: number): string {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 1e4 || a < 1e-3) return v.toExponential(1);
  return parseFloat(v.toPrecision(4)).toString();
}

function escapeXml(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

/** Blue→green→yellow sequential colormap (viridis-like anchor points). */
export function colormap(t: number): string {
  const stops: Array<[number, number, number]> = [
    [68, 1, 84],
    [59, 82, 139],
    [33, 145, 140],
    [94, 201, 98],
    [253, 231, 37],
  ];
  const clamped = Math.min(1, Math.max(0, t));
  const pos = clamped * (stops.length - 1);
  const i = Math.min(stops.length - 2, Math.floor(pos));
  const f = pos - i;
  const mix = stops[i].map((c, k) => Math.round(c + f * (stops[i + 1][k] - c)));
  return `rgb(${mix[0]},${mix[1]},${mix[2]})`;
}
