// Minimal deterministic SVG construction: linear scales, nice ticks, axes,
// and a handful of shape helpers. No DOM, just strings.

export interface Scale {
  (v: number): number;
  domain: [number, number];
  range: [number, number];
}

export function scaleLinear(domain: [number, number], range: [number, number]): Scale {
  const [d0, d1] = domain;
  const [r0, r1] = range;
  const span = d1 - d0 === 0 ? 1 : d1 - d0;
  const fn = ((v: number) => r0 + ((v - d0) / span) * (r1 - r0)) as Scale;
  fn.domain = domain;
  fn.range = range;
  return fn;
}

/** Round tick positions covering the domain, roughly `count` of them. */
export function ticks(domain: [number, number], count = 5): number[] {
  const [lo, hi] = domain;
  if (!(hi > lo)) return [lo];
  const step = tickStep(lo, hi, count);
  const start = Math.ceil(lo / step) * step;
  const out: number[] = [];
  for (let v = start; v <= hi + step * 1e-9; v += step) {
    out.push(Math.abs(v) < step * 1e-9 ? 0 : v);
  }
  return out;
}

function tickStep(lo: number, hi: number, count: number): number {
  const raw = (hi - lo) / Math.max(1, count);
  const pow = Math.pow(10, Math.floor(Math.log10(raw)));
  const err = raw / pow;
  if (err >= 7.5) return 10 * pow;
  if (err >= 3.5) return 5 * pow;
  if (err >= 1.5) return 2 * pow;
  return pow;
}

export function fmtTick(v: number): string {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 1e5 || a < 1e-3) return v.toExponential(1);
  return String(Number(v.toPrecision(6)));
}

export function esc(s: string): string {
  return s
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

const FONT = 'font-family="Helvetica, Arial, sans-serif"';

export function text(
  x: number,
  y: number,
  s: string,
  opts: { size?: number; anchor?: string; rotate?: number; fill?: string } = {}
): string {
  const size = opts.size ?? 11;
  const anchor = opts.anchor ?? "middle";
  const fill = opts.fill ?? "#222";
  const transform = opts.rotate ? ` transform="rotate(${opts.rotate} ${x} ${y})"` : "";
  return `<text x="${fx(x)}" y="${fx(y)}" ${FONT} font-size="${size}" text-anchor="${anchor}" fill="${fill}"${transform}>${esc(s)}</text>`;
}

export function polyline(points: [number, number][], stroke: string, width = 1.5, opacity = 1): string {
  const pts = points.map(([x, y]) => `${fx(x)},${fx(y)}`).join(" ");
  return `<polyline points="${pts}" fill="none" stroke="${stroke}" stroke-width="${width}" stroke-opacity="${opacity}" stroke-linejoin="round"/>`;
}

export function fx(v: number): string {
  return Number(v.toFixed(3)).toString();
}

export interface Frame {
  x: Scale;
  y: Scale;
  left: number;
  top: number;
  width: number;
  height: number;
}

/** A plot frame: border, tick marks, tick labels, and axis titles.
 * The y scale is flipped (screen y grows downward). */
export function frame(
  left: number,
  top: number,
  width: number,
  height: number,
  xDomain: [number, number],
  yDomain: [number, number],
  xLabel: string,
  yLabel: string
): { frame: Frame; svg: string } {
  const x = scaleLinear(xDomain, [left, left + width]);
  const y = scaleLinear(yDomain, [top + height, top]);
  const parts: string[] = [];
  parts.push(
    `<rect x="${fx(left)}" y="${fx(top)}" width="${fx(width)}" height="${fx(height)}" fill="none" stroke="#999" stroke-width="1"/>`
  );
  for (const t of ticks(xDomain)) {
    const px = x(t);
    parts.push(
      `<line x1="${fx(px)}" y1="${fx(top + height)}" x2="${fx(px)}" y2="${fx(top + height + 4)}" stroke="#999"/>`
    );
    parts.push(text(px, top + height + 16, fmtTick(t), { size: 10 }));
  }
  for (const t of ticks(yDomain)) {
    const py = y(t);
    parts.push(`<line x1="${fx(left - 4)}" y1="${fx(py)}" x2="${fx(left)}" y2="${fx(py)}" stroke="#999"/>`);
    parts.push(text(left - 7, py + 3, fmtTick(t), { size: 10, anchor: "end" }));
  }
  parts.push(text(left + width / 2, top + height + 32, xLabel, { size: 12 }));
  parts.push(
    text(left - 46, top + height / 2, yLabel, { size: 12, rotate: -90 })
  );
  return { frame: { x, y, left, top, width, height }, svg: parts.join("\n") };
}

export function document(width: number, height: number, body: string): string {
  return [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" viewBox="0 0 ${width} ${height}">`,
    `<rect width="${width}" height="${height}" fill="white"/>`,
    body,
    "</svg>",
  ].join("\n");
}

export const METHOD_COLORS: Record<string, string> = {
  pisto: "#1f77b4",
  stomp: "#ff7f0e",
  cem: "#2ca02c",
  mppi: "#d62728",
};

export function methodColor(method: string): string {
  return METHOD_COLORS[method] ?? "#7f7f7f";
}

export function legend(
  entries: [string, string][],
  x: number,
  y: number
): string {
  const parts: string[] = [];
  entries.forEach(([label, color], i) => {
    const yy = y + i * 16;
    parts.push(`<line x1="${fx(x)}" y1="${fx(yy)}" x2="${fx(x + 18)}" y2="${fx(yy)}" stroke="${color}" stroke-width="2.5"/>`);
    parts.push(text(x + 24, yy + 4, label, { size: 11, anchor: "start" }));
  });
  return parts.join("\n");
}
