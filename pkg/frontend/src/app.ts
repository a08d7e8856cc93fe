// Pure rendering: SessionState in, HTML string out. Keeping these free
// of DOM access makes them testable without a browser; main.ts owns the
// document and event wiring.

import type { PendingQuery, SessionState } from "./types.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function formatNumber(value: number | null, digits = 4): string {
  if (value === null) return "—";
  return value.toFixed(digits);
}

function thumbnail(meta: Record<string, string>, sequenceId: string): string {
  const src = meta["thumbnail"];
  if (src) {
    return `<img class="thumb" src="/static/${escapeHtml(src)}" alt="${escapeHtml(sequenceId)}">`;
  }
  // no thumbnail in the manifest: fall back to the id itself
  return `<div class="thumb thumb-fallback">${escapeHtml(sequenceId)}</div>`;
}

/**
 * Position of a distance on the band axis as a percentage, with the
 * band stretched across the middle of the scale so delta's relation to
 * (lambda_l, lambda_u) is visible at a glance.
 */
export function bandPosition(
  delta: number,
  lambdaL: number | null,
  lambdaU: number | null,
): number {
  if (lambdaL === null || lambdaU === null) return 50;
  const lo = Math.min(lambdaL, delta);
  const hi = Math.max(lambdaU, delta);
  if (hi === lo) return 50;
  return (100 * (delta - lo)) / (hi - lo);
}

export function renderBandAxis(query: PendingQuery): string {
  const { delta, lambda_l, lambda_u } = query;
  if (lambda_l === null || lambda_u === null) {
    return `<div class="band-axis band-axis-empty">δ = ${formatNumber(delta)} (bootstrap query, no band yet)</div>`;
  }
  const left = bandPosition(lambda_l, lambda_l, lambda_u);
  const right = bandPosition(lambda_u, lambda_l, lambda_u);
  const marker = bandPosition(delta, lambda_l, lambda_u);
  return `
    <div class="band-axis">
      <div class="band-range" style="left:${left}%;width:${right - left}%"></div>
      <div class="band-marker" style="left:${marker}%" title="δ = ${formatNumber(delta)}"></div>
      <span class="band-label band-label-l">λ_l = ${formatNumber(lambda_l)}</span>
      <span class="band-label band-label-u">λ_u = ${formatNumber(lambda_u)}</span>
    </div>`;
}

export function renderPendingQuery(query: PendingQuery): string {
  return `
    <div class="query-panel" data-query-id="${escapeHtml(query.query_id)}">
      <h2>Same object?</h2>
      <div class="pair">
        <figure>
          ${thumbnail(query.sequence_metadata, query.sequence_id)}
          <figcaption>current: ${escapeHtml(query.sequence_id)}</figcaption>
        </figure>
        <figure>
          ${thumbnail(query.nn_metadata, query.nn_sequence_id)}
          <figcaption>nearest: ${escapeHtml(query.nn_sequence_id)} (object #${query.nn_label})</figcaption>
        </figure>
      </div>
      <div class="delta">δ = ${formatNumber(query.delta)}${query.forced ? " · bootstrap" : ""}</div>
      ${renderBandAxis(query)}
      <div class="actions">
        <button data-action="same" accesskey="s">Same <kbd>S</kbd></button>
        <button data-action="different" accesskey="d">Different <kbd>D</kbd></button>
      </div>
    </div>`;
}

export function renderIdle(endOfStream: boolean): string {
  if (endOfStream) {
    return `<div class="query-panel idle">Stream finished.</div>`;
  }
  return `
    <div class="query-panel idle">
      <p>No query pending.</p>
      <button data-action="step">Step <kbd>⏎</kbd></button>
      <label><input type="checkbox" data-action="autostep"> auto-step</label>
    </div>`;
}

/** Inline SVG sparkline of the fetched query-rate history. */
export function renderSparkline(values: number[], width = 120, height = 24): string {
  if (values.length < 2) {
    return `<svg class="sparkline" width="${width}" height="${height}"></svg>`;
  }
  const points = values
    .map((v, i) => {
      const x = (i / (values.length - 1)) * width;
      const y = height - Math.max(0, Math.min(1, v)) * height;
      return `${x.toFixed(1)},${y.toFixed(1)}`;
    })
    .join(" ");
  return `<svg class="sparkline" width="${width}" height="${height}"><polyline fill="none" stroke="currentColor" points="${points}"/></svg>`;
}

/**
 * Telemetry panels. Every number is taken verbatim from the state
 * endpoint's response — nothing is recomputed client-side.
 */
export function renderTelemetry(
  state: SessionState,
  queryRateHistory: number[],
): string {
  const cells: Array<[string, string]> = [
    ["memory |M|", String(state.memory_size)],
    ["answers |K|", String(state.supervision_size)],
    ["objects", String(state.distinct_labels)],
    ["λ_l", formatNumber(state.lambda_l)],
    ["λ_u", formatNumber(state.lambda_u)],
    ["λ_r", formatNumber(state.lambda_r)],
    ["query rate", formatNumber(state.query_rate, 3)],
    ["progress", `${state.stream_position} / ${state.stream_length}`],
  ];
  const panels = cells
    .map(
      ([label, value]) =>
        `<div class="panel"><span class="panel-label">${escapeHtml(label)}</span><span class="panel-value">${escapeHtml(value)}</span></div>`,
    )
    .join("");
  return `
    <div class="telemetry">
      ${panels}
      <div class="panel panel-wide">
        <span class="panel-label">query rate over time</span>
        ${renderSparkline(queryRateHistory)}
      </div>
    </div>`;
}

export function renderApp(
  state: SessionState,
  queryRateHistory: number[],
  endOfStream: boolean,
): string {
  const main = state.pending
    ? renderPendingQuery(state.pending)
    : renderIdle(endOfStream);
  return `${renderTelemetry(state, queryRateHistory)}${main}`;
}
