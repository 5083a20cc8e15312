#!/usr/bin/env node
// usage: plotkit-render --input run.csv --panel speeds --out fig.svg [--metrics m.json]
import { PANELS, PanelKind, PlotSpec, render } from './panels.js';

function parseArgs(argv: string[]): PlotSpec {
  const args = new Map<string, string>();
  for (let i = 0; i < argv.length; i += 2) {
    const key = argv[i];
    if (!key.startsWith('--') || i + 1 >= argv.length) {
      throw new Error(`expected --flag value pairs, got "${argv.slice(i).join(' ')}"`);
    }
    args.set(key.slice(2), argv[i + 1]);
  }
  const input = args.get('input');
  const out = args.get('out');
  const panel = args.get('panel') as PanelKind | undefined;
  if (!input || !out || !panel) {
    throw new Error('required: --input FILE --panel KIND --out FILE');
  }
  if (!PANELS.includes(panel)) {
    throw new Error(`unknown panel "${panel}"; choose one of ${PANELS.join(', ')}`);
  }
  return { input, out, panel, metrics: args.get('metrics') };
}

try {
  const spec = parseArgs(process.argv.slice(2));
  render(spec);
  console.log(JSON.stringify({ out: spec.out, panel: spec.panel }));
} catch (err) {
  console.error(String(err instanceof Error ? err.message : err));
  process.exit(2);
}
