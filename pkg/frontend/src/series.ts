import { Row, numericColumn, requireColumns } from "./csv.js";
import { paretoNondominated } from "./pareto.js";

export const KINDS = [
  "comparison",
  "learning",
  "alpha-tradeoff",
  "attack-sweep",
  "resource-sweep",
] as const;

export type Kind = (typeof KINDS)[number];

export interface Series {
  name: string;
  x: number[];
  y: number[];
  flags?: boolean[];
  labels?: string[];
}

export interface FigureData {
  kind: Kind;
  xLabel: string;
  yLabel: string;
  series: Series[];
}

function policies(rows: Row[]): string[] {
  const seen: string[] = [];
  for (const row of rows) {
    if (!seen.includes(row.policy)) seen.push(row.policy);
  }
  return seen;
}

function perPolicy(rows: Row[], xCol: string, yCol: string): Series[] {
  requireColumns(rows, ["policy", xCol, yCol]);
  return policies(rows).map((policy) => {
    const subset = rows.filter((r) => r.policy === policy);
    return {
      name: policy,
      x: subset.map((r) => Number(r[xCol])),
      y: subset.map((r) => Number(r[yCol])),
    };
  });
}

/** Turn parsed CSV rows into the plotted series for one figure kind. */
export function buildFigure(kind: string, rows: Row[]): FigureData {
  switch (kind) {
    case "comparison": {
      requireColumns(rows, ["policy", "seed", "total_damage", "total_transfer_cost"]);
      const damage = perPolicy(rows, "seed", "total_damage").map((s) => ({
        ...s,
        name: `${s.name} damage`,
      }));
      const transfer = perPolicy(rows, "seed", "total_transfer_cost").map((s) => ({
        ...s,
        name: `${s.name} transfer`,
      }));
      return {
        kind,
        xLabel: "seed",
        yLabel: "episode total",
        series: [...damage, ...transfer],
      };
    }
    case "learning": {
      requireColumns(rows, ["t", "mean_damage_gap"]);
      return {
        kind,
        xLabel: "slot",
        yLabel: "damage gap",
        series: [
          {
            name: "learned minus known statistics",
            x: numericColumn(rows, "t"),
            y: numericColumn(rows, "mean_damage_gap"),
          },
        ],
      };
    }
    case "alpha-tradeoff": {
      requireColumns(rows, ["alpha", "mean_total_damage", "mean_total_transfer_cost"]);
      const z1 = numericColumn(rows, "mean_total_damage");
      const z2 = numericColumn(rows, "mean_total_transfer_cost");
      return {
        kind,
        xLabel: "mean total damage",
        yLabel: "mean total transfer cost",
        series: [
          {
            name: "risk ladder",
            x: z1,
            y: z2,
            flags: paretoNondominated(z1, z2),
            labels: rows.map((r) => `alpha=${r.alpha}`),
          },
        ],
      };
    }
    case "attack-sweep":
      return {
        kind,
        xLabel: "attack probability cap",
        yLabel: "mean total damage",
        series: perPolicy(rows, "p_max", "mean_total_damage"),
      };
    case "resource-sweep":
      return {
        kind,
        xLabel: "budget fraction",
        yLabel: "mean total damage",
        series: perPolicy(rows, "r_fraction", "mean_total_damage"),
      };
    default:
      throw new Error(`unknown figure kind "${kind}"; expected one of ${KINDS.join(", ")}`);
  }
}

/** Canonical JSON for the plotted data; byte-stable for identical inputs. */
export function dumpSeries(figure: FigureData): string {
  const payload = {
    kind: figure.kind,
    xLabel: figure.xLabel,
    yLabel: figure.yLabel,
    series: figure.series.map((s) => ({
      name: s.name,
      x: s.x,
      y: s.y,
      ...(s.flags ? { flags: s.flags } : {}),
      ...(s.labels ? { labels: s.labels } : {}),
    })),
  };
  return JSON.stringify(payload, null, 2) + "\n";
}
