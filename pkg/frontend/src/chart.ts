/** Dependency-free SVG line chart for the nDCG trajectory. */

export interface TrajectoryPoint {
  iteration: number;
  ndcg: number;
}

export function trajectorySvg(
  points: TrajectoryPoint[],
  width = 420,
  height = 160,
): string {
  const pad = { left: 34, right: 8, top: 8, bottom: 20 };
  const innerW = width - pad.left - pad.right;
  const innerH = height - pad.top - pad.bottom;
  const maxIter = Math.max(1, ...points.map((p) => p.iteration));
  const x = (it: number) => pad.left + ((it - 1) / Math.max(1, maxIter - 1)) * innerW;
  const y = (v: number) => pad.top + (1 - v) * innerH;

  const path = points
    .map((p, i) => `${i === 0 ? "M" : "L"}${x(p.iteration).toFixed(1)},${y(p.ndcg).toFixed(1)}`)
    .join(" ");
  const dots = points
    .map(
      (p) =>
        `<circle cx="${x(p.iteration).toFixed(1)}" cy="${y(p.ndcg).toFixed(1)}" r="2.5">` +
        `<title>iteration ${p.iteration}: nDCG ${p.ndcg.toFixed(4)}</title></circle>`,
    )
    .join("");
  const gridLines = [0, 0.5, 1]
    .map(
      (v) =>
        `<line x1="${pad.left}" y1="${y(v)}" x2="${width - pad.right}" y2="${y(v)}" ` +
        `class="grid"/><text x="2" y="${y(v) + 4}" class="tick">${v.toFixed(1)}</text>`,
    )
    .join("");

  return (
    `<svg viewBox="0 0 ${width} ${height}" class="trajectory" role="img" ` +
    `aria-label="nDCG per iteration">` +
    gridLines +
    (points.length > 0 ? `<path d="${path}" class="line"/>${dots}` : "") +
    `<text x="${pad.left}" y="${height - 4}" class="tick">iteration 1..${maxIter}</text>` +
    `</svg>`
  );
}
