import { FigureData, Series } from "./series.js";

const WIDTH = 720;
const HEIGHT = 440;
const MARGIN = { top: 28, right: 24, bottom: 44, left: 64 };
const PALETTE = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                 "#9467bd", "#8c564b", "#17becf", "#7f7f7f"];
const HIGHLIGHT = "#d62728";

function extent(values: number[]): [number, number] {
  let lo = Math.min(...values);
  let hi = Math.max(...values);
  if (lo === hi) {
    lo -= 1;
    hi += 1;
  }
  const pad = 0.05 * (hi - lo);
  return [lo - pad, hi + pad];
}

function fmt(x: number): string {
  return Number(x.toFixed(2)).toString();
}

/** Render a figure as a standalone SVG document (line charts; scatter when
 * a series carries nondominated flags). */
export function renderSvg(figure: FigureData): string {
  const xs = figure.series.flatMap((s) => s.x);
  const ys = figure.series.flatMap((s) => s.y);
  const [x0, x1] = extent(xs);
  const [y0, y1] = extent(ys);
  const plotW = WIDTH - MARGIN.left - MARGIN.right;
  const plotH = HEIGHT - MARGIN.top - MARGIN.bottom;
  const sx = (x: number) => MARGIN.left + ((x - x0) / (x1 - x0)) * plotW;
  const sy = (y: number) => MARGIN.top + plotH - ((y - y0) / (y1 - y0)) * plotH;

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" ` +
    `viewBox="0 0 ${WIDTH} ${HEIGHT}" font-family="sans-serif" font-size="12">`,
  );
  parts.push(`<rect width="${WIDTH}" height="${HEIGHT}" fill="white"/>`);
  // axes
  const axX0 = MARGIN.left;
  const axY0 = MARGIN.top + plotH;
  parts.push(`<line x1="${axX0}" y1="${axY0}" x2="${axX0 + plotW}" y2="${axY0}" stroke="black"/>`);
  parts.push(`<line x1="${axX0}" y1="${MARGIN.top}" x2="${axX0}" y2="${axY0}" stroke="black"/>`);
  parts.push(`<text x="${axX0}" y="${axY0 + 16}">${fmt(x0)}</text>`);
  parts.push(`<text x="${axX0 + plotW - 30}" y="${axY0 + 16}">${fmt(x1)}</text>`);
  parts.push(`<text x="${axX0 - 58}" y="${axY0}">${fmt(y0)}</text>`);
  parts.push(`<text x="${axX0 - 58}" y="${MARGIN.top + 10}">${fmt(y1)}</text>`);
  parts.push(
    `<text x="${axX0 + plotW / 2}" y="${HEIGHT - 8}" text-anchor="middle">${figure.xLabel}</text>`,
  );
  parts.push(
    `<text x="14" y="${MARGIN.top + plotH / 2}" transform="rotate(-90 14 ${MARGIN.top + plotH / 2})" ` +
    `text-anchor="middle">${figure.yLabel}</text>`,
  );
  if (y0 < 0 && y1 > 0) {
    parts.push(
      `<line x1="${axX0}" y1="${sy(0)}" x2="${axX0 + plotW}" y2="${sy(0)}" ` +
      `stroke="#999" stroke-dasharray="4 3"/>`,
    );
  }
  figure.series.forEach((series, idx) => {
    const color = PALETTE[idx % PALETTE.length];
    parts.push(...renderSeries(series, color, sx, sy));
    // legend entry
    const lx = axX0 + plotW - 170;
    const ly = MARGIN.top + 6 + 16 * idx;
    parts.push(`<line x1="${lx}" y1="${ly}" x2="${lx + 18}" y2="${ly}" stroke="${color}" stroke-width="2"/>`);
    parts.push(`<text x="${lx + 24}" y="${ly + 4}">${series.name}</text>`);
  });
  parts.push("</svg>");
  return parts.join("\n") + "\n";
}

function renderSeries(
  series: Series,
  color: string,
  sx: (x: number) => number,
  sy: (y: number) => number,
): string[] {
  const parts: string[] = [];
  if (series.flags) {
    // scatter with nondominated points highlighted
    series.x.forEach((x, i) => {
      const dominated = !series.flags![i];
      const fill = dominated ? color : HIGHLIGHT;
      const r = dominated ? 4 : 6;
      parts.push(`<circle cx="${sx(x)}" cy="${sy(series.y[i])}" r="${r}" fill="${fill}"/>`);
      if (series.labels) {
        parts.push(`<text x="${sx(x) + 8}" y="${sy(series.y[i]) - 6}">${series.labels[i]}</text>`);
      }
    });
  } else {
    const pts = series.x.map((x, i) => `${sx(x)},${sy(series.y[i])}`).join(" ");
    parts.push(`<polyline points="${pts}" fill="none" stroke="${color}" stroke-width="1.5"/>`);
  }
  return parts;
}
