import type { MetricRow } from "./types.js";

const SVG_NS = "http://www.w3.org/2000/svg";
const WIDTH = 560;
const HEIGHT = 220;
const PAD = { left: 46, right: 12, top: 10, bottom: 24 };
const COLORS = ["#2563eb", "#dc2626", "#059669", "#d97706", "#7c3aed", "#0891b2"];

function svgEl(tag: string, attrs: Record<string, string>): SVGElement {
  const el = document.createElementNS(SVG_NS, tag);
  for (const [k, v] of Object.entries(attrs)) el.setAttribute(k, v);
  return el;
}

/**
 * Plot per-seat windowed mean return against env_step.
 *
 * Only rows of kind "episode" with a returns vector are drawn; every drawn
 * point corresponds to exactly one received metric row, one circle per seat.
 * The host element's data-rows attribute records how many rows are plotted.
 */
export function renderChart(host: HTMLElement, rows: MetricRow[]): void {
  const plotted = rows.filter((r) => r.kind === "episode" && r.returns !== null);
  host.dataset.rows = String(plotted.length);
  host.textContent = "";

  const svg = svgEl("svg", {
    viewBox: `0 0 ${WIDTH} ${HEIGHT}`,
    class: "metric-chart",
    role: "img",
  });
  host.appendChild(svg);
  if (plotted.length === 0) {
    const empty = svgEl("text", { x: String(WIDTH / 2), y: String(HEIGHT / 2), "text-anchor": "middle", class: "chart-empty" });
    empty.textContent = "no episodes yet";
    svg.appendChild(empty);
    return;
  }

  const nSeats = (plotted[0].returns as number[]).length;
  const xs = plotted.map((r) => r.env_step);
  const ys = plotted.flatMap((r) => r.returns as number[]);
  const xMin = Math.min(...xs);
  const xMax = Math.max(...xs);
  let yMin = Math.min(...ys);
  let yMax = Math.max(...ys);
  if (yMax === yMin) {
    yMax += 1;
    yMin -= 1;
  }
  const xSpan = Math.max(xMax - xMin, 1);

  const px = (x: number) => PAD.left + ((x - xMin) / xSpan) * (WIDTH - PAD.left - PAD.right);
  const py = (y: number) => HEIGHT - PAD.bottom - ((y - yMin) / (yMax - yMin)) * (HEIGHT - PAD.top - PAD.bottom);

  svg.appendChild(svgEl("line", {
    x1: String(PAD.left), y1: String(HEIGHT - PAD.bottom),
    x2: String(WIDTH - PAD.right), y2: String(HEIGHT - PAD.bottom),
    class: "axis",
  }));
  svg.appendChild(svgEl("line", {
    x1: String(PAD.left), y1: String(PAD.top),
    x2: String(PAD.left), y2: String(HEIGHT - PAD.bottom),
    class: "axis",
  }));
  for (const [value, anchor, x, y] of [
    [yMax.toFixed(2), "end", PAD.left - 4, PAD.top + 8],
    [yMin.toFixed(2), "end", PAD.left - 4, HEIGHT - PAD.bottom],
    [String(xMin), "start", PAD.left, HEIGHT - 6],
    [String(xMax), "end", WIDTH - PAD.right, HEIGHT - 6],
  ] as const) {
    const label = svgEl("text", { x: String(x), y: String(y), "text-anchor": anchor, class: "axis-label" });
    label.textContent = String(value);
    svg.appendChild(label);
  }

  for (let seat = 0; seat < nSeats; seat++) {
    const color = COLORS[seat % COLORS.length];
    const pts = plotted.map((r) => `${px(r.env_step).toFixed(1)},${py((r.returns as number[])[seat]).toFixed(1)}`);
    svg.appendChild(svgEl("polyline", {
      points: pts.join(" "),
      fill: "none",
      stroke: color,
      "stroke-width": "1.5",
      class: `series series-${seat}`,
    }));
    for (const r of plotted) {
      svg.appendChild(svgEl("circle", {
        cx: px(r.env_step).toFixed(1),
        cy: py((r.returns as number[])[seat]).toFixed(1),
        r: "2",
        fill: color,
        class: "pt",
        "data-seat": String(seat),
        "data-seq": String(r.seq),
      }));
    }
  }
}
