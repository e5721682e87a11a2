/**
 * Figure builders: each consumes committed CSV or binary artifacts and
 * returns a complete SVG document string.  No physics is recomputed here;
 * annotations (fitted orders, caustic times) are read from the artifacts.
 */

import { readdirSync } from "node:fs";
import { join } from "node:path";

import { Table, column, columnsWithPrefix, readCsv, SchemaError } from "./csv.js";
import { magnitude, gridOf, readField } from "./bwkb.js";
import * as svg from "./svg.js";

const PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

function extent(values: ArrayLike<number>): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (let i = 0; i < values.length; i++) {
    const v = values[i];
    if (Number.isFinite(v)) {
      lo = Math.min(lo, v);
      hi = Math.max(hi, v);
    }
  }
  if (!(hi > lo)) {
    hi = lo + 1;
  }
  const pad = 0.05 * (hi - lo);
  return [lo - pad, hi + pad];
}

export function renderBands(bandsCsv: string): string {
  const table = readCsv(bandsCsv);
  const k = column(table, "k");
  const bands = columnsWithPrefix(table, "E_");
  const gaps = columnsWithPrefix(table, "gap_");
  const frame: svg.Frame = {
    width: 640, height: 420,
    margin: { left: 60, right: 20, top: 30, bottom: 40 },
    xRange: extent(k),
    yRange: extent(bands.flatMap((b) => [Math.min(...b.values), Math.max(...b.values)])),
  };
  const body: string[] = [];
  // shade the first gap band between E_1 max and E_2 min
  if (bands.length >= 2) {
    const top = Math.min(...bands[1].values);
    const bottom = Math.max(...bands[0].values);
    if (top > bottom) {
      const y0 = svg.yPix(frame, top);
      const y1 = svg.yPix(frame, bottom);
      body.push(svg.rect(svg.xPix(frame, frame.xRange[0]), y0,
                         svg.xPix(frame, frame.xRange[1]) - svg.xPix(frame, frame.xRange[0]),
                         y1 - y0, "#fff3c4"));
    }
  }
  bands.forEach((band, i) => {
    body.push(svg.polyline(frame, k, band.values, PALETTE[i % PALETTE.length]));
  });
  const minGap = Math.min(...gaps[0].values);
  body.push(...svg.axes(frame, "momentum k", "band energy",
                        svg.ticksOver(frame.xRange[0], frame.xRange[1]),
                        svg.ticksOver(frame.yRange[0], frame.yRange[1])));
  body.push(svg.text(frame.width - 24, 18, `min gap ${svg.fmt(minGap)}`, 12, "end"));
  return svg.document(frame.width, frame.height, body);
}

export function renderRayFan(raysDir: string): string {
  const bundle = readCsv(join(raysDir, "bundle.csv"));
  column(bundle, "x0");
  const caustics = bundle.labels.map((row) =>
    Number(row[bundle.columns.indexOf("caustic_time")]));
  const rayFiles = readdirSync(raysDir).filter((f) => /^ray_\d+\.csv$/.test(f)).sort();
  if (rayFiles.length === 0) {
    throw new SchemaError(`${raysDir}: no ray_*.csv files`);
  }
  const rays = rayFiles.map((f) => {
    const t = readCsv(join(raysDir, f));
    return { t: column(t, "t"), x: column(t, "x") };
  });
  const tMax = Math.max(...rays.map((r) => r.t[r.t.length - 1]));
  const frame: svg.Frame = {
    width: 640, height: 420,
    margin: { left: 60, right: 20, top: 30, bottom: 40 },
    xRange: [0, tMax * 1.02],
    yRange: extent(rays.flatMap((r) => [Math.min(...r.x), Math.max(...r.x)])),
  };
  const body: string[] = [];
  rays.forEach((ray, i) => {
    body.push(svg.polyline(frame, ray.t, ray.x, PALETTE[i % PALETTE.length], 1.0));
  });
  const firstCaustic = Math.min(...caustics.filter((c) => Number.isFinite(c)));
  if (Number.isFinite(firstCaustic) && firstCaustic <= tMax) {
    body.push(svg.line(frame, firstCaustic, frame.yRange[0], firstCaustic,
                       frame.yRange[1], "#d62728", "6,3"));
    body.push(svg.text(svg.xPix(frame, firstCaustic) + 4, frame.margin.top + 12,
                       `caustic t=${svg.fmt(firstCaustic)}`, 11));
  }
  body.push(...svg.axes(frame, "time", "ray position",
                        svg.ticksOver(frame.xRange[0], frame.xRange[1]),
                        svg.ticksOver(frame.yRange[0], frame.yRange[1])));
  return svg.document(frame.width, frame.height, body);
}

export function renderConvergence(convergenceCsv: string, ordersCsv: string): string {
  const table = readCsv(convergenceCsv);
  const eps = column(table, "epsilon");
  const l2 = column(table, "l2_error");
  const linf = column(table, "linf_error");
  const orders = readCsv(ordersCsv);
  const orderL2 = column(orders, "fitted_order_l2")[0];
  const orderLinf = column(orders, "fitted_order_linf")[0];

  const lx = eps.map((e) => Math.log10(e));
  const ly2 = l2.map((e) => Math.log10(e));
  const lyi = linf.map((e) => Math.log10(e));
  const frame: svg.Frame = {
    width: 560, height: 420,
    margin: { left: 70, right: 20, top: 30, bottom: 44 },
    xRange: extent(lx),
    yRange: extent([...ly2, ...lyi]),
  };
  const body: string[] = [];
  body.push(svg.polyline(frame, lx, ly2, PALETTE[0]));
  body.push(svg.polyline(frame, lx, lyi, PALETTE[1]));
  for (let i = 0; i < lx.length; i++) {
    body.push(svg.rect(svg.xPix(frame, lx[i]) - 2, svg.yPix(frame, ly2[i]) - 2, 4, 4, PALETTE[0]));
    body.push(svg.rect(svg.xPix(frame, lx[i]) - 2, svg.yPix(frame, lyi[i]) - 2, 4, 4, PALETTE[1]));
  }
  body.push(...svg.axes(frame, "log10 epsilon", "log10 error",
                        lx, svg.ticksOver(frame.yRange[0], frame.yRange[1])));
  body.push(svg.text(frame.width - 24, 18,
                     `L2 slope ${svg.fmt(orderL2)}  Linf slope ${svg.fmt(orderLinf)}`,
                     12, "end"));
  return svg.document(frame.width, frame.height, body);
}

export function renderWigner(wignerCsv: string): string {
  const table = readCsv(wignerCsv);
  const xs = column(table, "x");
  const xis = column(table, "xi");
  const w = column(table, "w");
  const wPred = column(table, "w_predicted");
  const xVals = [...new Set(xs)].sort((a, b) => a - b);
  const xiVals = [...new Set(xis)].sort((a, b) => a - b);
  const nx = xVals.length;
  const nxi = xiVals.length;
  if (nx * nxi !== xs.length) {
    throw new SchemaError(`${wignerCsv}: rows do not fill an (x, xi) grid`);
  }
  const xIndex = new Map(xVals.map((v, i) => [v, i]));
  const xiIndex = new Map(xiVals.map((v, i) => [v, i]));
  const gridW: number[][] = Array.from({ length: nx }, () => new Array(nxi).fill(0));
  const gridP: number[][] = Array.from({ length: nx }, () => new Array(nxi).fill(0));
  for (let r = 0; r < xs.length; r++) {
    const i = xIndex.get(xs[r]) as number;
    const l = xiIndex.get(xis[r]) as number;
    gridW[i][l] = w[r];
    gridP[i][l] = wPred[r];
  }
  const peak = Math.max(
    ...w.map((v) => Math.abs(v)), ...wPred.map((v) => Math.abs(v)), 1e-300);

  const panel = 300;
  const gapPx = 40;
  const width = 2 * panel + gapPx + 80;
  const height = panel + 80;
  const body: string[] = [];
  const cellW = panel / nx;
  const cellH = panel / nxi;
  const draw = (grid: number[][], x0: number, label: string) => {
    for (let i = 0; i < nx; i++) {
      for (let l = 0; l < nxi; l++) {
        const u = 0.5 + 0.5 * (grid[i][l] / peak);
        body.push(svg.rect(x0 + i * cellW, 40 + (nxi - 1 - l) * cellH,
                           cellW + 0.5, cellH + 0.5, svg.heatColor(u)));
      }
    }
    body.push(svg.text(x0 + panel / 2, 28, label, 13, "middle"));
    body.push(svg.text(x0 + panel / 2, height - 26, "x", 12, "middle"));
  };
  draw(gridW, 50, "transform");
  draw(gridP, 50 + panel + gapPx, "band-comb prediction");
  body.push(svg.text(20, 40 + panel / 2, "xi", 12, "middle"));
  return svg.document(width, height, body);
}

export function renderFieldMagnitude(fieldPath: string): string {
  const field = readField(fieldPath);
  const x = gridOf(field);
  const mag = magnitude(field);
  const frame: svg.Frame = {
    width: 640, height: 360,
    margin: { left: 60, right: 20, top: 30, bottom: 40 },
    xRange: [field.xMin, field.xMax],
    yRange: extent(mag),
  };
  const body: string[] = [
    svg.polyline(frame, x, mag, PALETTE[0], 0.8),
    ...svg.axes(frame, "x", "|field|",
                svg.ticksOver(field.xMin, field.xMax),
                svg.ticksOver(frame.yRange[0], frame.yRange[1])),
    svg.text(frame.width - 24, 18,
             `epsilon ${svg.fmt(field.epsilon)}  t ${svg.fmt(field.t)}`, 12, "end"),
  ];
  return svg.document(frame.width, frame.height, body);
}
