/**
 * rnls-plots render --kind KIND --in PATH[,PATH...] --out FILE
 *
 * Renders one deterministic SVG figure from simulator output files.
 * Exit codes: 0 ok, 2 usage/schema error, 4 io error.
 */

import { writeFileSync } from "fs";
import { FIGURE_KINDS, render } from "./figures";
import { SchemaError } from "./schema";

function usage(): string {
  return (
    "usage: render --kind KIND --in PATH[,PATH...] --out FILE\n" +
    `kinds: ${FIGURE_KINDS.join(", ")}`
  );
}

export function main(argv: string[]): number {
  if (argv[0] !== "render") {
    process.stderr.write(usage() + "\n");
    return 2;
  }
  const opts = new Map<string, string>();
  for (let i = 1; i < argv.length; i += 2) {
    const key = argv[i];
    const val = argv[i + 1];
    if (!key || !key.startsWith("--") || val === undefined) {
      process.stderr.write(usage() + "\n");
      return 2;
    }
    opts.set(key.slice(2), val);
  }
  const kind = opts.get("kind");
  const inputs = opts.get("in");
  const out = opts.get("out");
  if (!kind || !inputs || !out) {
    process.stderr.write(usage() + "\n");
    return 2;
  }
  let svg: string;
  try {
    svg = render(kind, inputs.split(",").map((p) => p.trim()).filter((p) => p.length > 0));
  } catch (err) {
    if (err instanceof SchemaError) {
      process.stderr.write(`schema error: ${err.message}\n`);
      return 2;
    }
    if (err instanceof Error && "code" in err) {
      process.stderr.write(`io error: ${err.message}\n`);
      return 4;
    }
    throw err;
  }
  try {
    writeFileSync(out, svg, "utf-8");
  } catch (err) {
    process.stderr.write(`io error: ${(err as Error).message}\n`);
    return 4;
  }
  return 0;
}

if (require.main === module) {
  process.exit(main(process.argv.slice(2)));
}
