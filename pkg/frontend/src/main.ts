import { writeFileSync } from "node:fs";
import { parseArgs } from "node:util";
import { loadRecipe, renderRecipe } from "./figures.js";

export function main(argv: string[]): number {
  const { values, positionals } = parseArgs({
    args: argv,
    options: {
      recipe: { type: "string" },
      out: { type: "string" },
    },
    allowPositionals: true,
  });
  if (positionals[0] !== "render" || !values.recipe) {
    process.stderr.write("usage: vqnhe-figures render --recipe <file.json> [--out <file.svg>]\n");
    return 2;
  }
  try {
    const recipe = loadRecipe(values.recipe);
    const svg = renderRecipe(recipe);
    writeFileSync(values.out ?? recipe.output, svg);
    process.stdout.write(`${values.out ?? recipe.output}\n`);
    return 0;
  } catch (err) {
    process.stderr.write(`error: ${err instanceof Error ? err.message : String(err)}\n`);
    return 1;
  }
}

process.exitCode = main(process.argv.slice(2));
