#!/usr/bin/env node
// pisto-plot: render figures from benchmark results CSVs.
//
//   pisto-plot plot --kind convergence|bars|overlay --in results.csv \
//       --out fig.svg [--task T] [--method M]
//
// The output format follows the file extension: .svg writes the SVG text,
// .png rasterizes it.
import * as fs from "fs";
import * as path from "path";
import { parseResults, RunFilter } from "./csv";
import { FigureKind, render } from "./figures";

const USAGE =
  "usage: pisto-plot plot --kind <convergence|bars|overlay> --in <results.csv> --out <fig.svg|fig.png> [--task T] [--method M]";

interface Args {
  kind: FigureKind;
  inPath: string;
  outPath: string;
  filter: RunFilter;
}

export function parseArgs(argv: string[]): Args {
  if (argv[0] !== "plot") {
    throw new Error(USAGE);
  }
  const opts = new Map<string, string>();
  for (let i = 1; i < argv.length; i += 2) {
    const flag = argv[i];
    const value = argv[i + 1];
    if (!flag.startsWith("--") || value === undefined) {
      throw new Error(USAGE);
    }
    opts.set(flag.slice(2), value);
  }
  const known = new Set(["kind", "in", "out", "task", "method"]);
  for (const key of opts.keys()) {
    if (!known.has(key)) {
      throw new Error(`unknown option --${key}\n${USAGE}`);
    }
  }
  const kind = opts.get("kind");
  const inPath = opts.get("in");
  const outPath = opts.get("out");
  if (!kind || !inPath || !outPath) {
    throw new Error(USAGE);
  }
  if (kind !== "convergence" && kind !== "bars" && kind !== "overlay") {
    throw new Error(`unknown figure kind ${JSON.stringify(kind)}\n${USAGE}`);
  }
  return {
    kind,
    inPath,
    outPath,
    filter: { task: opts.get("task"), method: opts.get("method") },
  };
}

export function writeFigure(svgText: string, outPath: string): void {
  const ext = path.extname(outPath).toLowerCase();
  fs.mkdirSync(path.dirname(path.resolve(outPath)), { recursive: true });
  if (ext === ".svg") {
    fs.writeFileSync(outPath, svgText);
  } else if (ext === ".png") {
    // loaded lazily so SVG output works even without the native rasterizer
    const { Resvg } = require("@resvg/resvg-js");
    fs.writeFileSync(outPath, new Resvg(svgText).render().asPng());
  } else {
    throw new Error(`unsupported output extension ${ext || "(none)"}; use .svg or .png`);
  }
}

export function main(argv: string[]): number {
  let args: Args;
  try {
    args = parseArgs(argv);
  } catch (err) {
    console.error((err as Error).message);
    return 2;
  }
  try {
    const table = parseResults(args.inPath);
    const result = render(args.kind, table, args.filter);
    for (const w of result.warnings) {
      console.warn(`warning: ${w}`);
    }
    writeFigure(result.svg, args.outPath);
    console.log(`wrote ${args.outPath}`);
    return 0;
  } catch (err) {
    console.error(`error: ${(err as Error).message}`);
    return 1;
  }
}

if (require.main === module) {
  process.exit(main(process.argv.slice(2)));
}
