// Dependency-free SVG line charts. Output is a plain string with no
// timestamps or random ids, so re-rendering the same data is byte-identical.

export interface Series {
  label: string;
  x: number[];
  y: number[];
}

export interface ChartOptions {
  title: string;
  xLabel: string;
  yLabel: string;
  width?: number;
  height?: number;
  /** horizontal reference line, e.g. a bound to stay under */
  refLine?: { y: number; label: string };
  legend?: boolean;
}

const PALETTE = ['#1f77b4', '#d62728', '#2ca02c', '#9467bd', '#ff7f0e', '#8c564b', '#17becf'];
const MARGIN = { top: 34, right: 14, bottom: 40, left: 58 };
const MAX_POINTS = 1500;

function niceTicks(lo: number, hi: number, n = 5): number[] {
  if (!(hi > lo)) {
    hi = lo + 1;
  }
  const span = hi - lo;
  const step0 = span / n;
  const mag = Math.pow(10, Math.floor(Math.log10(step0)));
  const step = [1, 2, 5, 10].map((m) => m * mag).find((s) => span / s <= n + 1) ?? 10 * mag;
  const start = Math.ceil(lo / step) * step;
  const ticks: number[] = [];
  for (let v = start; v <= hi + 1e-12 * span; v += step) {
    ticks.push(Math.abs(v) < 1e-12 * span ? 0 : v);
  }
  return ticks;
}

function fmt(v: number): string {
  if (v === 0) return '0';
  const a = Math.abs(v);
  if (a >= 1e4 || a < 1e-3) return v.toExponential(1);
  return String(Number(v.toPrecision(6)));
}

function downsample(xs: number[], ys: number[]): [number[], number[]] {
  if (xs.length <= MAX_POINTS) return [xs, ys];
  const stride = Math.ceil(xs.length / MAX_POINTS);
  const x: number[] = [];
  const y: number[] = [];
  for (let i = 0; i < xs.length; i += stride) {
    x.push(xs[i]);
    y.push(ys[i]);
  }
  if ((xs.length - 1) % stride !== 0) {
    x.push(xs[xs.length - 1]);
    y.push(ys[ys.length - 1]);
  }
  return [x, y];
}

export function lineChart(series: Series[], opts: ChartOptions): string {
  const width = opts.width ?? 460;
  const height = opts.height ?? 320;
  const innerW = width - MARGIN.left - MARGIN.right;
  const innerH = height - MARGIN.top - MARGIN.bottom;

  let xMin = Infinity;
  let xMax = -Infinity;
  let yMin = Infinity;
  let yMax = -Infinity;
  for (const s of series) {
    for (const v of s.x) {
      if (v < xMin) xMin = v;
      if (v > xMax) xMax = v;
    }
    for (const v of s.y) {
      if (v < yMin) yMin = v;
      if (v > yMax) yMax = v;
    }
  }
  if (opts.refLine) {
    yMin = Math.min(yMin, opts.refLine.y);
    yMax = Math.max(yMax, opts.refLine.y);
  }
  if (!Number.isFinite(xMin)) {
    throw new Error(`chart "${opts.title}": no data points`);
  }
  if (xMax === xMin) xMax = xMin + 1;
  if (yMax === yMin) {
    yMax = yMin + 1;
    yMin -= 1;
  }
  const pad = 0.04 * (yMax - yMin);
  yMin -= pad;
  yMax += pad;

  const px = (v: number) => MARGIN.left + ((v - xMin) / (xMax - xMin)) * innerW;
  const py = (v: number) => MARGIN.top + innerH - ((v - yMin) / (yMax - yMin)) * innerH;

  const parts: string[] = [];
  parts.push(`<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" viewBox="0 0 ${width} ${height}" font-family="Helvetica,Arial,sans-serif">`);
  parts.push(`<rect width="${width}" height="${height}" fill="white"/>`);
  parts.push(`<text x="${width / 2}" y="18" text-anchor="middle" font-size="13" font-weight="bold">${opts.title}</text>`);

  for (const t of niceTicks(xMin, xMax)) {
    const x = px(t).toFixed(2);
    parts.push(`<line x1="${x}" y1="${MARGIN.top}" x2="${x}" y2="${MARGIN.top + innerH}" stroke="#dddddd" stroke-width="0.6"/>`);
    parts.push(`<text x="${x}" y="${MARGIN.top + innerH + 16}" text-anchor="middle" font-size="10">${fmt(t)}</text>`);
  }
  for (const t of niceTicks(yMin, yMax)) {
    const y = py(t).toFixed(2);
    parts.push(`<line x1="${MARGIN.left}" y1="${y}" x2="${MARGIN.left + innerW}" y2="${y}" stroke="#dddddd" stroke-width="0.6"/>`);
    parts.push(`<text x="${MARGIN.left - 6}" y="${y}" text-anchor="end" dominant-baseline="middle" font-size="10">${fmt(t)}</text>`);
  }
  parts.push(`<rect x="${MARGIN.left}" y="${MARGIN.top}" width="${innerW}" height="${innerH}" fill="none" stroke="#444444" stroke-width="1"/>`);
  parts.push(`<text x="${MARGIN.left + innerW / 2}" y="${height - 8}" text-anchor="middle" font-size="11">${opts.xLabel}</text>`);
  parts.push(`<text transform="translate(14,${MARGIN.top + innerH / 2}) rotate(-90)" text-anchor="middle" font-size="11">${opts.yLabel}</text>`);

  if (opts.refLine) {
    const y = py(opts.refLine.y).toFixed(2);
    parts.push(`<line x1="${MARGIN.left}" y1="${y}" x2="${MARGIN.left + innerW}" y2="${y}" stroke="#888888" stroke-width="1" stroke-dasharray="5,4"/>`);
    parts.push(`<text x="${MARGIN.left + innerW - 4}" y="${Number(y) - 4}" text-anchor="end" font-size="10" fill="#555555">${opts.refLine.label}</text>`);
  }

  series.forEach((s, k) => {
    const [xs, ys] = downsample(s.x, s.y);
    const pts = xs.map((v, i) => `${px(v).toFixed(2)},${py(ys[i]).toFixed(2)}`).join(' ');
    parts.push(`<polyline points="${pts}" fill="none" stroke="${PALETTE[k % PALETTE.length]}" stroke-width="1.3"/>`);
  });

  if (opts.legend !== false && series.length > 1) {
    series.forEach((s, k) => {
      const lx = MARGIN.left + innerW - 78;
      const ly = MARGIN.top + 12 + 14 * k;
      parts.push(`<line x1="${lx}" y1="${ly}" x2="${lx + 18}" y2="${ly}" stroke="${PALETTE[k % PALETTE.length]}" stroke-width="2"/>`);
      parts.push(`<text x="${lx + 23}" y="${ly + 3.5}" font-size="10">${s.label}</text>`);
    });
  }
  parts.push('</svg>');
  return parts.join('\n');
}

/** Arrange standalone charts in a fixed grid by nesting them as <svg x= y=>. */
export function grid(cells: string[], cols: number, cellW = 460, cellH = 320): string {
  const rows = Math.ceil(cells.length / cols);
  const width = cols * cellW;
  const height = rows * cellH;
  const parts = [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" viewBox="0 0 ${width} ${height}">`,
  ];
  cells.forEach((svg, i) => {
    const x = (i % cols) * cellW;
    const y = Math.floor(i / cols) * cellH;
    parts.push(`<svg x="${x}" y="${y}" width="${cellW}" height="${cellH}">`);
    parts.push(svg.replace(/^<svg[^>]*>/, '').replace(/<\/svg>\s*$/, ''));
    parts.push('</svg>');
  });
  parts.push('</svg>');
  return parts.join('\n');
}
