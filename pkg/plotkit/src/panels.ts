// Panel definitions over the rdvsim output contracts:
//  - trajectory CSV (t, per vehicle i: x{i},y{i},z{i},vx{i},...,u{i},tau*{i})
//  - monitor trace CSV (t,V,rho,W_tran,W_rot,W,gamma_dist)
//  - sweep JSON ({rows: [{k1,k2,seed,steady_state_max_pairwise_distance,...}]})
import * as fs from 'node:fs';

import { Table, column, readCsvFile, requireColumns, vehicleCount } from './csv.js';
import { Series, grid, lineChart } from './svg.js';

export type PanelKind = 'positions' | 'speeds' | 'pairwise-distance' | 'w-trace' | 'sweep';

export const PANELS: PanelKind[] = ['positions', 'speeds', 'pairwise-distance', 'w-trace', 'sweep'];

export interface PlotSpec {
  input: string;
  panel: PanelKind;
  out: string;
  metrics?: string;
}

function perVehicle(table: Table, prefix: string, n: number): number[][] {
  const idx = requireColumns(table, Array.from({ length: n }, (_, i) => `${prefix}${i + 1}`));
  return idx.map((c) => table.rows.map((r) => r[c]));
}

function axisSeries(table: Table, axis: 'x' | 'y' | 'z', n: number, t: number[]): Series[] {
  return perVehicle(table, axis, n).map((ys, i) => ({ label: `vehicle ${i + 1}`, x: t, y: ys }));
}

export function speedSeries(table: Table): Series[] {
  const n = vehicleCount(table);
  const t = column(table, 't');
  const vx = perVehicle(table, 'vx', n);
  const vy = perVehicle(table, 'vy', n);
  const vz = perVehicle(table, 'vz', n);
  return vx.map((_, i) => ({
    label: `vehicle ${i + 1}`,
    x: t,
    y: vx[i].map((v, k) => Math.hypot(v, vy[i][k], vz[i][k])),
  }));
}

export function maxPairwiseDistance(table: Table): Series {
  const n = vehicleCount(table);
  const t = column(table, 't');
  const xs = perVehicle(table, 'x', n);
  const ys = perVehicle(table, 'y', n);
  const zs = perVehicle(table, 'z', n);
  const y = t.map((_, k) => {
    let best = 0;
    for (let i = 0; i < n; i++) {
      for (let j = i + 1; j < n; j++) {
        const d = Math.hypot(xs[i][k] - xs[j][k], ys[i][k] - ys[j][k], zs[i][k] - zs[j][k]);
        if (d > best) best = d;
      }
    }
    return best;
  });
  return { label: 'max pairwise distance', x: t, y };
}

function positionsFigure(table: Table): string {
  const n = vehicleCount(table);
  const t = column(table, 't');
  const cells = (['x', 'y', 'z'] as const).map((axis) =>
    lineChart(axisSeries(table, axis, n, t), {
      title: `${axis} position`,
      xLabel: 't (s)',
      yLabel: `${axis} (m)`,
    }),
  );
  cells.push(lineChart(speedSeries(table), {
    title: 'linear speeds',
    xLabel: 't (s)',
    yLabel: '|v| (m/s)',
  }));
  return grid(cells, 2);
}

function speedsFigure(table: Table): string {
  return lineChart(speedSeries(table), {
    title: 'linear speeds',
    xLabel: 't (s)',
    yLabel: '|v| (m/s)',
    width: 640,
    height: 420,
  });
}

function pairwiseFigure(table: Table, metricsPath?: string): string {
  const s = maxPairwiseDistance(table);
  let title = 'max pairwise distance';
  if (metricsPath) {
    const metrics = JSON.parse(fs.readFileSync(metricsPath, 'utf8'));
    const steady = metrics.steady_state_max_pairwise_distance;
    if (typeof steady === 'number') {
      title += ` (steady state ${steady.toPrecision(3)} m)`;
    }
  }
  return lineChart([s], {
    title,
    xLabel: 't (s)',
    yLabel: 'distance (m)',
    width: 640,
    height: 420,
    refLine: { y: 0.25, label: '0.25 m' },
    legend: false,
  });
}

function wTraceFigure(table: Table): string {
  const t = column(table, 't');
  const W = column(table, 'W');
  const gamma = column(table, 'gamma_dist');
  const cells = [
    lineChart([{ label: 'W', x: t, y: W }], {
      title: 'monitored energy W',
      xLabel: 't (s)',
      yLabel: 'W',
    }),
    lineChart([{ label: 'distance to rendezvous', x: t, y: gamma }], {
      title: 'distance to the rendezvous set',
      xLabel: 't (s)',
      yLabel: 'max_ij sqrt(|x_ij|^2+|v_ij|^2)',
    }),
  ];
  return grid(cells, 2);
}

interface SweepRow {
  k1: number;
  k2: number;
  seed: number;
  steady_state_max_pairwise_distance: number;
}

export function sweepFigure(jsonPath: string): string {
  const doc = JSON.parse(fs.readFileSync(jsonPath, 'utf8'));
  const rows: SweepRow[] = doc.rows;
  if (!Array.isArray(rows) || rows.length === 0) {
    throw new Error(`${jsonPath}: no sweep rows`);
  }
  const byGain = new Map<string, SweepRow[]>();
  for (const r of rows) {
    const key = `${r.k1}:${r.k2}`;
    byGain.set(key, [...(byGain.get(key) ?? []), r]);
  }
  const gains = [...byGain.keys()].sort((a, b) => Number(a.split(':')[0]) - Number(b.split(':')[0]));
  const x = gains.map((g) => Number(g.split(':')[0]));
  const median = (vals: number[]) => {
    const v = [...vals].sort((a, b) => a - b);
    const m = v.length >> 1;
    return v.length % 2 ? v[m] : (v[m - 1] + v[m]) / 2;
  };
  const y = gains.map((g) => median(byGain.get(g)!.map((r) => r.steady_state_max_pairwise_distance)));
  return lineChart([{ label: 'steady-state distance', x, y }], {
    title: 'steady-state distance vs gain',
    xLabel: 'k1 (with k2 scaled alongside)',
    yLabel: 'median steady-state distance (m)',
    width: 560,
    height: 400,
    legend: false,
  });
}

/** Render one panel to spec.out; nothing is written unless rendering succeeds. */
export function render(spec: PlotSpec): void {
  let svg: string;
  if (spec.panel === 'sweep') {
    svg = sweepFigure(spec.input);
  } else {
    const table = readCsvFile(spec.input);
    switch (spec.panel) {
      case 'positions':
        svg = positionsFigure(table);
        break;
      case 'speeds':
        svg = speedsFigure(table);
        break;
      case 'pairwise-distance':
        svg = pairwiseFigure(table, spec.metrics);
        break;
      case 'w-trace':
        svg = wTraceFigure(table);
        break;
      default:
        throw new Error(`unknown panel: ${spec.panel}`);
    }
  }
  fs.writeFileSync(spec.out, svg + '\n');
}
