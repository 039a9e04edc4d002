/**
 * The five standard figures, each a pure function of the input files.
 */

import {
  readEvolveSummary,
  readSeries,
  readStabilityCsv,
  readSweepSummary,
  readVortexCsv,
  SchemaError,
} from "./schema";
import { bounds, color, document, fmt, legend, Panel } from "./svg";

export const FIGURE_KINDS = [
  "variance-vs-closed-form",
  "gradient-blowup-loglog",
  "threshold-phase-diagram",
  "vortex-energy-vs-m",
  "stability-distance",
] as const;

export type FigureKind = (typeof FIGURE_KINDS)[number];

const W = 720;
const H = 520;

function needInputs(inputs: string[], n: number, kind: string): void {
  if (inputs.length !== n) {
    throw new SchemaError(`${kind} needs ${n} input path(s), got ${inputs.length}`);
  }
}

/** Measured variance against its sinusoidal solution, residual subpanel. */
export function varianceFigure(inputs: string[]): string {
  needInputs(inputs, 2, "variance-vs-closed-form");
  const series = readSeries(inputs[0]!);
  const summary = readEvolveSummary(inputs[1]!);
  const gamma = summary.params.gamma;
  const first = series[0]!;
  const offset = (first.energy - first.angular) / (gamma * gamma);
  const a = first.J - offset;
  const b = first.dJ / (2 * gamma);
  const amp = Math.hypot(a, b);
  const beta = Math.atan2(a, b);

  const ts = series.map((r) => r.t);
  const js = series.map((r) => r.J);
  const model = ts.map((t) => amp * Math.sin(2 * gamma * t + beta) + offset);
  const resid = js.map((j, i) => j - model[i]!);

  const [x0, x1] = bounds(ts);
  const [y0, y1] = bounds(js.concat(model));
  const main = new Panel({ left: 70, top: 40, width: W - 110, height: 300 }, { x0, x1, y0, y1 });
  const [r0, r1] = bounds(resid);
  const sub = new Panel({ left: 70, top: 400, width: W - 110, height: 80 }, { x0, x1, y0: r0, y1: r1 });

  return document(W, H, [
    main.frame("variance J(t) against the closed-form solution", "t", "J"),
    main.ticks(),
    main.polyline(ts, js, color(0)),
    main.polyline(ts, model, color(1), "5 3"),
    legend(90, 60, [["measured J", color(0)], ["C sin(2gt+b) + offset", color(1)]]),
    sub.frame("residual", "t", "J - model"),
    sub.ticks(5, 2),
    sub.polyline(ts, resid, color(2)),
  ]);
}

/** Gradient growth toward detection on log-log axes with reference slopes. */
export function blowupFigure(inputs: string[]): string {
  needInputs(inputs, 2, "gradient-blowup-loglog");
  const series = readSeries(inputs[0]!);
  const summary = readEvolveSummary(inputs[1]!);
  const tDetect = summary.t_detect;
  if (tDetect === null) {
    throw new SchemaError(`${inputs[1]}: key 't_detect' is null (not a detected run)`);
  }
  const taus: number[] = [];
  const grads: number[] = [];
  for (const row of series) {
    const tau = tDetect - row.t;
    if (tau > 0 && row.grad_norm > 0) {
      taus.push(tau);
      grads.push(row.grad_norm);
    }
  }
  if (taus.length === 0) {
    throw new SchemaError(`${inputs[0]}: no data rows precede t_detect`);
  }
  const [x0, x1] = bounds(taus, 0.06, true);
  const [y0, y1] = bounds(grads, 0.06, true);
  const panel = new Panel({ left: 80, top: 40, width: W - 120, height: 420 },
    { x0, x1, y0, y1, logX: true, logY: true });

  // reference slopes anchored at the median sample
  const order = taus.map((v, i) => [v, i] as const).sort((p, q) => p[0] - q[0]);
  const mid = order[Math.floor(order.length / 2)]![1];
  const tMid = taus[mid]!;
  const gMid = grads[mid]!;
  const refTaus = [x0 * 1.2, x1 * 0.8];
  const refHalf = refTaus.map((t) => gMid * Math.sqrt(tMid / t));
  const refOne = refTaus.map((t) => (gMid * tMid) / t);

  return document(W, H, [
    panel.frame("gradient norm approaching detection", "T_detect - t", "|grad u|"),
    panel.ticks(),
    panel.polyline(taus, grads, color(0)),
    panel.polyline(refTaus, refHalf, color(1), "5 3"),
    panel.polyline(refTaus, refOne, color(2), "2 3"),
    legend(100, 60, [
      ["measured", color(0)],
      ["slope -1/2", color(1)],
      ["slope -1", color(2)],
    ]),
  ]);
}

/** Sweep outcomes by mass factor with the transition band. */
export function thresholdFigure(inputs: string[]): string {
  needInputs(inputs, 1, "threshold-phase-diagram");
  const sweep = readSweepSummary(inputs[0]!);
  const cs = sweep.rows.map((r) => r.c);
  const [x0, x1] = bounds(cs, 0.12);
  const panel = new Panel({ left: 80, top: 60, width: W - 120, height: 360 },
    { x0, x1, y0: -0.5, y1: 1.5 });

  const globals = sweep.rows.filter((r) => r.outcome === "global");
  const blowups = sweep.rows.filter((r) => r.outcome === "blowup");
  const others = sweep.rows.filter((r) => r.outcome !== "global" && r.outcome !== "blowup");

  const body = [
    panel.frame(
      `threshold sweep (${sweep.family}); mass factor relative to the free profile`,
      "c", "",
    ),
    panel.ticks(5, 0),
    panel.markers(globals.map((r) => r.c), globals.map(() => 1), color(2), "circle"),
    panel.markers(blowups.map((r) => r.c), blowups.map(() => 0), color(1), "cross"),
    panel.markers(others.map((r) => r.c), others.map(() => 0.5), color(5), "square"),
    legend(100, 80, [
      ["global", color(2)],
      ["blowup", color(1)],
    ]),
  ];
  if (sweep.transition_c !== null) {
    body.push(panel.vline(sweep.transition_c, "#555555"));
    body.push(panel.label(sweep.transition_c, 1.35, ` transition c = ${fmt(sweep.transition_c)}`, "#555555"));
  }
  return document(W, H, body);
}

/** Vortex-family energy versus winding number with the analytic overlay. */
export function vortexFigure(inputs: string[]): string {
  needInputs(inputs, 1, "vortex-energy-vs-m");
  const rows = readVortexCsv(inputs[0]!);
  const ms = rows.map((r) => r.m);
  const es = rows.map((r) => r.energy);
  const as = rows.map((r) => r.analytic_energy);
  const [x0, x1] = bounds(ms, 0.08);
  const [y0, y1] = bounds(es.concat(as));
  const panel = new Panel({ left: 80, top: 40, width: W - 120, height: 420 },
    { x0, x1, y0, y1 });
  return document(W, H, [
    panel.frame("vortex family energy", "winding number m", "E"),
    panel.ticks(),
    panel.markers(ms, es, color(0), "circle"),
    panel.polyline(ms, as, color(1), "5 3"),
    legend(100, 60, [
      ["numerical", color(0)],
      ["analytic", color(1)],
    ]),
  ]);
}

/** Orbit distance over time, one curve per perturbation direction. */
export function stabilityFigure(inputs: string[]): string {
  needInputs(inputs, 1, "stability-distance");
  const points = readStabilityCsv(inputs[0]!);
  const directions = Array.from(new Set(points.map((p) => p.direction)));
  const [x0, x1] = bounds(points.map((p) => p.t));
  const [y0, y1] = bounds(points.map((p) => p.distance).concat([0]));
  const panel = new Panel({ left: 80, top: 40, width: W - 120, height: 420 },
    { x0, x1, y0, y1 });
  const body = [
    panel.frame("orbit distance under perturbation", "t", "d(t)"),
    panel.ticks(),
  ];
  const entries: [string, string][] = [];
  directions.forEach((dir, i) => {
    const sel = points.filter((p) => p.direction === dir);
    body.push(panel.polyline(sel.map((p) => p.t), sel.map((p) => p.distance), color(i)));
    entries.push([dir, color(i)]);
  });
  body.push(legend(100, 60, entries));
  return document(W, H, body);
}

export function render(kind: string, inputs: string[]): string {
  switch (kind) {
    case "variance-vs-closed-form":
      return varianceFigure(inputs);
    case "gradient-blowup-loglog":
      return blowupFigure(inputs);
    case "threshold-phase-diagram":
      return thresholdFigure(inputs);
    case "vortex-energy-vs-m":
      return vortexFigure(inputs);
    case "stability-distance":
      return stabilityFigure(inputs);
    default:
      throw new SchemaError(
        `unknown figure kind '${kind}'; expected one of ${FIGURE_KINDS.join(", ")}`,
      );
  }
}
