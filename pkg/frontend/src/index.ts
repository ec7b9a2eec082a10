export { parseCsv, numericColumn, requireColumns } from "./csv.js";
export { paretoNondominated } from "./pareto.js";
export { KINDS, buildFigure, dumpSeries } from "./series.js";
export type { FigureData, Kind, Series } from "./series.js";
export { renderSvg } from "./svg.js";
