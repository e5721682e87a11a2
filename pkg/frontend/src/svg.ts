/**
 * Deterministic SVG assembly: fixed decimal formatting, no timestamps, no
 * randomness, so identical inputs produce byte-identical files.
 */

export interface Frame {
  width: number;
  height: number;
  margin: { left: number; right: number; top: number; bottom: number };
  xRange: [number, number];
  yRange: [number, number];
}

export function fmt(v: number): string {
  if (!Number.isFinite(v)) {
    return "0";
  }
  const s = v.toFixed(3);
  return s === "-0.000" ? "0.000" : s;
}

export function xPix(frame: Frame, x: number): number {
  const { left, right } = frame.margin;
  const [lo, hi] = frame.xRange;
  return left + ((x - lo) / (hi - lo)) * (frame.width - left - right);
}

export function yPix(frame: Frame, y: number): number {
  const { top, bottom } = frame.margin;
  const [lo, hi] = frame.yRange;
  return frame.height - bottom - ((y - lo) / (hi - lo)) * (frame.height - top - bottom);
}

export function polyline(frame: Frame, xs: ArrayLike<number>, ys: ArrayLike<number>,
                         stroke: string, width = 1.2): string {
  const pts: string[] = [];
  for (let i = 0; i < xs.length; i++) {
    pts.push(`${fmt(xPix(frame, xs[i]))},${fmt(yPix(frame, ys[i]))}`);
  }
  return `<polyline fill="none" stroke="${stroke}" stroke-width="${width}" points="${pts.join(" ")}"/>`;
}

export function line(frame: Frame, x0: number, y0: number, x1: number, y1: number,
                     stroke: string, dash = ""): string {
  const d = dash ? ` stroke-dasharray="${dash}"` : "";
  return `<line x1="${fmt(xPix(frame, x0))}" y1="${fmt(yPix(frame, y0))}" ` +
    `x2="${fmt(xPix(frame, x1))}" y2="${fmt(yPix(frame, y1))}" stroke="${stroke}"${d}/>`;
}

export function text(x: number, y: number, content: string, size = 12,
                     anchor = "start"): string {
  return `<text x="${fmt(x)}" y="${fmt(y)}" font-family="monospace" ` +
    `font-size="${size}" text-anchor="${anchor}">${escapeXml(content)}</text>`;
}

export function rect(x: number, y: number, w: number, h: number, fill: string): string {
  return `<rect x="${fmt(x)}" y="${fmt(y)}" width="${fmt(w)}" height="${fmt(h)}" fill="${fill}"/>`;
}

export function escapeXml(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

export function axes(frame: Frame, xLabel: string, yLabel: string,
                     xTicks: number[], yTicks: number[],
                     tickFmt: (v: number) => string = fmt): string[] {
  const parts: string[] = [];
  const x0 = frame.margin.left;
  const x1 = frame.width - frame.margin.right;
  const y0 = frame.height - frame.margin.bottom;
  const y1 = frame.margin.top;
  parts.push(`<line x1="${fmt(x0)}" y1="${fmt(y0)}" x2="${fmt(x1)}" y2="${fmt(y0)}" stroke="black"/>`);
  parts.push(`<line x1="${fmt(x0)}" y1="${fmt(y0)}" x2="${fmt(x0)}" y2="${fmt(y1)}" stroke="black"/>`);
  for (const t of xTicks) {
    const px = xPix(frame, t);
    parts.push(`<line x1="${fmt(px)}" y1="${fmt(y0)}" x2="${fmt(px)}" y2="${fmt(y0 + 4)}" stroke="black"/>`);
    parts.push(text(px, y0 + 16, tickFmt(t), 10, "middle"));
  }
  for (const t of yTicks) {
    const py = yPix(frame, t);
    parts.push(`<line x1="${fmt(x0 - 4)}" y1="${fmt(py)}" x2="${fmt(x0)}" y2="${fmt(py)}" stroke="black"/>`);
    parts.push(text(x0 - 6, py + 3, tickFmt(t), 10, "end"));
  }
  parts.push(text((x0 + x1) / 2, frame.height - 6, xLabel, 12, "middle"));
  parts.push(text(14, (y0 + y1) / 2, yLabel, 12, "middle"));
  return parts;
}

export function document(width: number, height: number, body: string[]): string {
  return [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" viewBox="0 0 ${width} ${height}">`,
    `<rect x="0" y="0" width="${width}" height="${height}" fill="white"/>`,
    ...body,
    "</svg>",
    "",
  ].join("\n");
}

export function ticksOver(lo: number, hi: number, count = 5): number[] {
  const out: number[] = [];
  for (let i = 0; i < count; i++) {
    out.push(lo + ((hi - lo) * i) / (count - 1));
  }
  return out;
}

/** Blue-to-red diverging color for normalized values in [0, 1]. */
export function heatColor(u: number): string {
  const v = Math.max(0, Math.min(1, u));
  const r = Math.round(255 * Math.min(1, 2 * v));
  const b = Math.round(255 * Math.min(1, 2 * (1 - v)));
  const g = Math.round(255 * (1 - Math.abs(2 * v - 1)) * 0.85);
  return `rgb(${r},${g},${b})`;
}
