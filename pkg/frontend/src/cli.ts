import { readFileSync, writeFileSync } from "node:fs";
import { pathToFileURL } from "node:url";

import { parseCsv } from "./csv.js";
import { KINDS, buildFigure, dumpSeries } from "./series.js";
import { renderSvg } from "./svg.js";

const USAGE =
  `usage: plot <kind> <csv> -o <img.svg> [--dump-series <series.json>]\n` +
  `  kinds: ${KINDS.join(", ")}`;

export function main(argv: string[]): number {
  try {
    const args = [...argv];
    let out: string | undefined;
    let dump: string | undefined;
    const positional: string[] = [];
    while (args.length > 0) {
      const arg = args.shift()!;
      if (arg === "-o" || arg === "--out") {
        out = args.shift();
      } else if (arg === "--dump-series") {
        dump = args.shift();
      } else if (arg === "-h" || arg === "--help") {
        console.log(USAGE);
        return 0;
      } else if (arg.startsWith("-")) {
        throw new Error(`unknown flag ${arg}\n${USAGE}`);
      } else {
        positional.push(arg);
      }
    }
    if (positional.length !== 2) {
      throw new Error(USAGE);
    }
    const [kind, csvPath] = positional;
    const rows = parseCsv(readFileSync(csvPath, "utf8"));
    const figure = buildFigure(kind, rows);
    if (out) {
      writeFileSync(out, renderSvg(figure));
      console.log(`wrote ${out}`);
    }
    if (dump) {
      writeFileSync(dump, dumpSeries(figure));
      console.log(`wrote ${dump}`);
    }
    if (!out && !dump) {
      process.stdout.write(dumpSeries(figure));
    }
    return 0;
  } catch (err) {
    console.error(`error: ${err instanceof Error ? err.message : err}`);
    return 1;
  }
}

if (process.argv[1] && import.meta.url === pathToFileURL(process.argv[1]).href) {
  process.exit(main(process.argv.slice(2)));
}
