/**
 * Batch renderer: `node dist/cli.js <kind> <inputs...> --out figure.svg`.
 *
 * Kinds: bands <bands.csv>; rays <rays-dir>; convergence <convergence.csv>
 * <orders.csv>; wigner <wigner.csv>; field <field.bwkb>.  Inputs are never
 * modified and rendering is deterministic, so reruns are byte-identical.
 */

import { writeFileSync } from "node:fs";

import { SchemaError } from "./csv.js";
import { FormatError } from "./bwkb.js";
import {
  renderBands,
  renderConvergence,
  renderFieldMagnitude,
  renderRayFan,
  renderWigner,
} from "./figures.js";

function usage(): never {
  process.stderr.write(
    "usage: render <bands|rays|convergence|wigner|field> <inputs...> --out <file.svg>\n",
  );
  process.exit(2);
}

export function main(argv: string[]): number {
  const outIdx = argv.indexOf("--out");
  if (outIdx < 0 || outIdx + 1 >= argv.length || argv.length < 2) {
    usage();
  }
  const out = argv[outIdx + 1];
  const kind = argv[0];
  const inputs = argv.slice(1, outIdx);
  try {
    let doc: string;
    switch (kind) {
      case "bands":
        doc = renderBands(inputs[0]);
        break;
      case "rays":
        doc = renderRayFan(inputs[0]);
        break;
      case "convergence":
        doc = renderConvergence(inputs[0], inputs[1]);
        break;
      case "wigner":
        doc = renderWigner(inputs[0]);
        break;
      case "field":
        doc = renderFieldMagnitude(inputs[0]);
        break;
      default:
        usage();
    }
    writeFileSync(out, doc);
    process.stdout.write(`wrote ${out}\n`);
    return 0;
  } catch (err) {
    if (err instanceof SchemaError || err instanceof FormatError) {
      process.stderr.write(`${err.message}\n`);
      return 1;
    }
    throw err;
  }
}

main(process.argv.slice(2));
