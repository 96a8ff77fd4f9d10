// Reading and validating the benchmark results CSV (one fixed header,
// iteration and summary rows distinguished by row_type) plus the JSON
// solution sidecars referenced from summary rows.
import * as fs from "fs";
import * as path from "path";
import Papa from "papaparse";

export const CSV_COLUMNS = [
  "row_type",
  "task",
  "method",
  "seed",
  "iteration",
  "best_cost",
  "mean_cost",
  "sigma_k",
  "eta_k",
  "update_norm",
  "success",
  "path_length",
  "clearance",
  "final_cost",
  "wall_time_ms",
  "solution_file",
] as const;

export interface IterationRow {
  task: string;
  method: string;
  seed: number;
  iteration: number;
  bestCost: number;
  meanCost: number;
  sigmaK: number;
  etaK: number;
  updateNorm: number;
}

export interface SummaryRow {
  task: string;
  method: string;
  seed: number;
  success: boolean;
  pathLength: number | null;
  clearance: number | null;
  finalCost: number;
  wallTimeMs: number;
  solutionFile: string;
}

export interface ResultsTable {
  iterations: IterationRow[];
  summaries: SummaryRow[];
  /** Directory of the CSV file; relative sidecar paths resolve against it. */
  csvDir: string;
}

// The writer emits Infinity/-Infinity for non-finite floats, which Number()
// already understands; empty cells mean "not applicable".
function num(value: string): number {
  const v = Number(value);
  if (value === "" || Number.isNaN(v)) {
    throw new Error(`expected a number, got ${JSON.stringify(value)}`);
  }
  return v;
}

function numOrNull(value: string): number | null {
  return value === "" ? null : num(value);
}

export function parseResults(csvPath: string): ResultsTable {
  const text = fs.readFileSync(csvPath, "utf8");
  const parsed = Papa.parse<Record<string, string>>(text, {
    header: true,
    skipEmptyLines: true,
  });
  if (parsed.errors.length > 0) {
    const e = parsed.errors[0];
    throw new Error(`failed to parse ${csvPath}: ${e.message} (row ${e.row})`);
  }
  const fields = parsed.meta.fields ?? [];
  const missing = CSV_COLUMNS.filter((c) => !fields.includes(c));
  if (missing.length > 0) {
    throw new Error(`${csvPath} is missing expected columns: ${missing.join(", ")}`);
  }
  const iterations: IterationRow[] = [];
  const summaries: SummaryRow[] = [];
  for (const row of parsed.data) {
    if (row.row_type === "iteration") {
      iterations.push({
        task: row.task,
        method: row.method,
        seed: num(row.seed),
        iteration: num(row.iteration),
        bestCost: num(row.best_cost),
        meanCost: num(row.mean_cost),
        sigmaK: num(row.sigma_k),
        etaK: num(row.eta_k),
        updateNorm: num(row.update_norm),
      });
    } else if (row.row_type === "summary") {
      summaries.push({
        task: row.task,
        method: row.method,
        seed: num(row.seed),
        success: row.success === "true",
        pathLength: numOrNull(row.path_length),
        clearance: numOrNull(row.clearance),
        finalCost: num(row.final_cost),
        wallTimeMs: num(row.wall_time_ms),
        solutionFile: row.solution_file,
      });
    } else {
      throw new Error(`unknown row_type ${JSON.stringify(row.row_type)} in ${csvPath}`);
    }
  }
  return { iterations, summaries, csvDir: path.dirname(path.resolve(csvPath)) };
}

export interface RunFilter {
  task?: string;
  method?: string;
}

function taskMatches(rowTask: string, wanted: string): boolean {
  // allow matching a scene either by its full stored path or its file stem
  if (rowTask === wanted) return true;
  const stem = path.basename(rowTask).replace(/\.json$/, "");
  return stem === wanted || path.basename(rowTask) === wanted;
}

export function filterRows<T extends { task: string; method: string }>(
  rows: T[],
  filter: RunFilter
): T[] {
  return rows.filter(
    (r) =>
      (filter.task === undefined || taskMatches(r.task, filter.task)) &&
      (filter.method === undefined || r.method === filter.method)
  );
}

// -- solution sidecars --------------------------------------------------------

export interface PathSolution {
  kind: "path";
  task: string;
  method: string;
  seed: number;
  scene: string;
  nodes: [number, number][];
}

export interface ControlsSolution {
  kind: "controls";
  task: string;
  method: string;
  seed: number;
  model: string;
  controls: number[][];
  states: number[][];
}

export type Solution = PathSolution | ControlsSolution;

/** Resolve a stored file reference: absolute paths as-is, otherwise against
 * the given base directories (first match that exists wins). */
export function resolveRef(ref: string, bases: string[]): string {
  if (path.isAbsolute(ref) && fs.existsSync(ref)) return ref;
  for (const base of bases) {
    const candidate = path.resolve(base, ref);
    if (fs.existsSync(candidate)) return candidate;
  }
  // fall back to the raw reference so the caller's error shows the original
  return ref;
}

export function loadSolution(summary: SummaryRow, csvDir: string): Solution {
  const file = resolveRef(summary.solutionFile, [csvDir, process.cwd()]);
  if (!fs.existsSync(file)) {
    throw new Error(`solution file not found: ${summary.solutionFile}`);
  }
  return JSON.parse(fs.readFileSync(file, "utf8")) as Solution;
}

// -- scene files ----------------------------------------------------------------

export interface SceneCircle {
  type: "circle";
  center: [number, number];
  radius: number;
}

export interface SceneBox {
  type: "box";
  min: [number, number];
  max: [number, number];
}

export interface Scene {
  bounds: { min: [number, number]; max: [number, number] };
  start: [number, number];
  goal: [number, number];
  delta: number;
  w_obs: number;
  sigma_obs: number;
  obstacles: (SceneCircle | SceneBox)[];
}

export function loadScene(ref: string, bases: string[]): Scene {
  const file = resolveRef(ref, bases);
  if (!fs.existsSync(file)) {
    throw new Error(`scene file not found: ${ref}`);
  }
  return JSON.parse(fs.readFileSync(file, "utf8")) as Scene;
}
