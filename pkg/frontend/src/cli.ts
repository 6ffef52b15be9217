/**
 * Figure renderer entry point.
 *
 * Usage:
 *   node dist/cli.js <yields|finishes|ebrake|trace> <input> <output.svg>
 *                    [--family sc2] [--controller proposed ...]
 *
 * The output file is written only after the figure rendered successfully; a
 * schema mismatch or empty input exits nonzero with no file.
 */

import { writeFileSync } from "node:fs";
import { exit } from "node:process";

import { FigureKind, FigureSpec, renderEbrake, renderFinishes, renderTrace, renderYields } from "./figures.js";
import { SchemaError, loadSummary, loadTrace } from "./schema.js";

const KINDS: FigureKind[] = ["yields", "finishes", "ebrake", "trace"];

export function render(kind: FigureKind, inputPath: string, spec: FigureSpec): string {
  if (kind === "trace") {
    return renderTrace(loadTrace(inputPath));
  }
  const rows = loadSummary(inputPath);
  if (kind === "yields") {
    return renderYields(rows, spec);
  }
  if (kind === "finishes") {
    return renderFinishes(rows, spec);
  }
  return renderEbrake(rows, spec);
}

export function main(argv: string[]): number {
  const positional: string[] = [];
  const controllers: string[] = [];
  let family: string | undefined;
  for (let i = 0; i < argv.length; i++) {
    if (argv[i] === "--family") {
      family = argv[++i];
    } else if (argv[i] === "--controller") {
      controllers.push(argv[++i]);
    } else {
      positional.push(argv[i]);
    }
  }
  if (positional.length !== 3 || !KINDS.includes(positional[0] as FigureKind)) {
    console.error(`usage: render <${KINDS.join("|")}> <input> <output.svg> [--family f] [--controller c]...`);
    return 2;
  }
  const [kind, input, output] = positional;
  try {
    const svg = render(kind as FigureKind, input, { kind: kind as FigureKind, family, controllers });
    writeFileSync(output, svg);
    console.log(`wrote ${output}`);
    return 0;
  } catch (err) {
    if (err instanceof SchemaError) {
      console.error(`schema error: ${err.message}`);
    } else {
      console.error(String(err));
    }
    return 1;
  }
}

if (import.meta.url === `file://${process.argv[1]}`) {
  exit(main(process.argv.slice(2)));
}
