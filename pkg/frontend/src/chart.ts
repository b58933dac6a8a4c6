/**
 * Rolling amplitude chart.
 *
 * `layoutChart` is pure: console state in, pixel geometry out. Every dot in
 * the layout is one telemetry record (it keeps the record's pulse index and
 * sequence number), and nothing else ever becomes a dot; the connecting
 * polyline is a visual guide between real points, never synthesized data.
 * `drawChart` just paints a layout onto a 2D context.
 */

import type { ConsoleState, Point } from "./store.js";
import type { Stage } from "./protocol.js";

export interface ChartOptions {
  width: number;
  height: number;
  /** visible span of irradiation time, seconds */
  windowSeconds?: number;
  /**
   * Right edge of the window in irradiation time. Omit to follow the
   * stream (scrollback sets this explicitly).
   */
  endTime?: number;
}

export interface Dot {
  x: number;
  y: number;
  pulseIndex: number;
  seq: number;
}

export interface Band {
  stage: Stage;
  x0: number;
  x1: number;
}

export interface Mark {
  stage: Stage;
  x: number;
  t: number;
}

export interface ChartLayout {
  width: number;
  height: number;
  t0: number;
  t1: number;
  vMax: number;
  dots: Dot[];
  bands: Band[];
  marks: Mark[];
}

export const DEFAULT_WINDOW_S = 90;

export const STAGE_COLORS: Record<Stage, string> = {
  insufficient: "#9aa0a6",
  A: "#4f86c6",
  B: "#e0a030",
  C: "#d05050",
};

const STAGE_FILLS: Record<Stage, string> = {
  insufficient: "rgba(154,160,166,0.10)",
  A: "rgba(79,134,198,0.10)",
  B: "rgba(224,160,48,0.14)",
  C: "rgba(208,80,80,0.16)",
};

export function layoutChart(
  state: ConsoleState, options: ChartOptions,
): ChartLayout {
  const windowSeconds = options.windowSeconds ?? DEFAULT_WINDOW_S;
  const points = state.points;
  const lastT = points.length > 0 ? points[points.length - 1]!.t : 0;
  const t1 = options.endTime ?? Math.max(lastT, windowSeconds);
  const t0 = t1 - windowSeconds;

  let vMax = 0;
  for (const p of points) vMax = Math.max(vMax, p.v);
  vMax = vMax > 0 ? vMax * 1.1 : 1;

  const sx = (t: number) =>
    ((t - t0) / windowSeconds) * options.width;
  const sy = (v: number) =>
    options.height - (v / vMax) * options.height;

  const dots: Dot[] = [];
  for (const p of points) {
    if (p.t < t0 || p.t > t1) continue;
    dots.push({ x: sx(p.t), y: sy(p.v), pulseIndex: p.pulseIndex, seq: p.seq });
  }

  const bands: Band[] = [];
  const marks: Mark[] = [];
  for (let i = 0; i < state.stageMarks.length; i++) {
    const mark = state.stageMarks[i]!;
    const next = state.stageMarks[i + 1];
    const from = Math.max(mark.t, t0);
    // the current stage persists, so its band runs to the window edge
    const to = Math.min(next ? next.t : t1, t1);
    if (to > from) {
      bands.push({ stage: mark.stage, x0: sx(from), x1: sx(to) });
    }
    if (mark.t >= t0 && mark.t <= t1 && i > 0) {
      marks.push({ stage: mark.stage, x: sx(mark.t), t: mark.t });
    }
  }

  return {
    width: options.width, height: options.height,
    t0, t1, vMax, dots, bands, marks,
  };
}

/** The slice of CanvasRenderingContext2D the painter needs. */
export interface Canvas2DLike {
  fillStyle: string | CanvasGradient | CanvasPattern;
  strokeStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
  font: string;
  clearRect(x: number, y: number, w: number, h: number): void;
  fillRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  stroke(): void;
  fill(): void;
  fillText(text: string, x: number, y: number): void;
}

export function drawChart(ctx: Canvas2DLike, layout: ChartLayout): void {
  const { width, height } = layout;
  ctx.clearRect(0, 0, width, height);
  ctx.fillStyle = "#16181d";
  ctx.fillRect(0, 0, width, height);

  for (const band of layout.bands) {
    ctx.fillStyle = STAGE_FILLS[band.stage];
    ctx.fillRect(band.x0, 0, band.x1 - band.x0, height);
  }

  for (const mark of layout.marks) {
    ctx.strokeStyle = STAGE_COLORS[mark.stage];
    ctx.lineWidth = 1;
    ctx.beginPath();
    ctx.moveTo(mark.x, 0);
    ctx.lineTo(mark.x, height);
    ctx.stroke();
    ctx.fillStyle = STAGE_COLORS[mark.stage];
    ctx.font = "12px sans-serif";
    ctx.fillText(`${mark.stage} @ ${mark.t.toFixed(1)}s`, mark.x + 4, 14);
  }

  if (layout.dots.length > 1) {
    ctx.strokeStyle = "#d8dee9";
    ctx.lineWidth = 1.5;
    ctx.beginPath();
    layout.dots.forEach((dot, i) => {
      if (i === 0) ctx.moveTo(dot.x, dot.y);
      else ctx.lineTo(dot.x, dot.y);
    });
    ctx.stroke();
  }
  ctx.fillStyle = "#eceff4";
  for (const dot of layout.dots) {
    ctx.beginPath();
    ctx.arc(dot.x, dot.y, 1.6, 0, Math.PI * 2);
    ctx.fill();
  }

  // sparse time labels along the bottom edge
  ctx.fillStyle = "#7a828e";
  ctx.font = "11px sans-serif";
  const step = (layout.t1 - layout.t0) / 6;
  for (let i = 0; i <= 6; i++) {
    const t = layout.t0 + i * step;
    const x = (i / 6) * width;
    ctx.fillText(`${t.toFixed(0)}s`, Math.min(x + 2, width - 30), height - 4);
  }
}
