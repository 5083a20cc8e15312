import * as fs from 'node:fs';
import * as os from 'node:os';
import * as path from 'node:path';

export function tmpDir(): string {
  return fs.mkdtempSync(path.join(os.tmpdir(), 'plotkit-'));
}

export function trajectoryColumns(n: number): string[] {
  const cols = ['t'];
  for (let i = 1; i <= n; i++) {
    cols.push(`x${i}`, `y${i}`, `z${i}`, `vx${i}`, `vy${i}`, `vz${i}`);
    for (const r of [1, 2, 3]) {
      for (const c of [1, 2, 3]) {
        cols.push(`R${i}_${r}${c}`);
      }
    }
    cols.push(`wx${i}`, `wy${i}`, `wz${i}`, `u${i}`, `taux${i}`, `tauy${i}`, `tauz${i}`);
  }
  return cols;
}

/** Tiny synthetic two-vehicle trajectory with analytically known content. */
export function writeSyntheticTrajectory(file: string, rows = 5): string[] {
  const cols = trajectoryColumns(2);
  const lines = [cols.join(',')];
  for (let k = 0; k < rows; k++) {
    const t = k * 0.1;
    const record: Record<string, number> = { t };
    for (let i = 1; i <= 2; i++) {
      record[`x${i}`] = i + t;
      record[`y${i}`] = -i * t;
      record[`z${i}`] = 0.5 * i;
      record[`vx${i}`] = 1;
      record[`vy${i}`] = -i;
      record[`vz${i}`] = 0;
      for (const r of [1, 2, 3]) {
        for (const c of [1, 2, 3]) {
          record[`R${i}_${r}${c}`] = r === c ? 1 : 0;
        }
      }
      record[`wx${i}`] = 0;
      record[`wy${i}`] = 0;
      record[`wz${i}`] = 0.1;
      record[`u${i}`] = -9.8 * i;
      record[`taux${i}`] = 0;
      record[`tauy${i}`] = 0.01;
      record[`tauz${i}`] = 0;
    }
    lines.push(cols.map((c) => String(record[c])).join(','));
  }
  fs.writeFileSync(file, lines.join('\n') + '\n');
  return cols;
}
