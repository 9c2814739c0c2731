// Pure presentation: every number rendered here is the verbatim string form
// of a value received from the service; nothing is recomputed client-side.

import type { FeaturesResponse, RoiPayload, SegmentResponse } from "./api.js";

export const FEATURE_ORDER = [
  "echogenicity",
  "heterogeneity",
  "fnpa",
  "fnpa_midband",
  "cooccurrence_contrast",
  "hurst",
  "hurst_midband",
  "margin_definition",
  "aspect_ratio",
  "compactness",
  "compactness_raw",
  "roundness",
  "roundness_raw",
  "convexity",
  "solidity",
  "form_factor",
] as const;

export function verbatim(value: number | string | null | undefined): string {
  if (value === null || value === undefined) return "missing";
  return String(value);
}

export function renderThreshold(input: HTMLInputElement, label: HTMLElement, segmentation: SegmentResponse): void {
  input.value = String(segmentation.threshold_used);
  label.textContent = verbatim(segmentation.threshold_used);
}

export function renderRoiTable(
  table: HTMLTableElement,
  segmentation: SegmentResponse | null,
  selectedLabel: number | null,
): void {
  const columns: (keyof RoiPayload)[] = [
    "label",
    "area_mm2",
    "width_mm",
    "depth_mm",
    "max_diameter_mm",
    "perimeter_mm",
  ];
  table.innerHTML = "";
  const head = table.createTHead().insertRow();
  for (const column of columns) {
    const cell = document.createElement("th");
    cell.textContent = column;
    head.appendChild(cell);
  }
  const body = table.createTBody();
  if (!segmentation) return;
  for (const roi of segmentation.rois) {
    const row = body.insertRow();
    row.dataset.label = String(roi.label);
    if (roi.label === selectedLabel) row.classList.add("selected");
    for (const column of columns) {
      row.insertCell().textContent = verbatim(roi[column] as number);
    }
  }
}

export function renderFeatureTable(table: HTMLTableElement, response: FeaturesResponse | null): void {
  table.innerHTML = "";
  const body = table.createTBody();
  if (!response) return;
  for (const name of FEATURE_ORDER) {
    const value = response.features[name];
    const row = body.insertRow();
    row.dataset.feature = name;
    row.insertCell().textContent = name;
    row.insertCell().textContent = verbatim(value as number | null);
  }
}

export function renderScoreBadge(badge: HTMLElement, response: FeaturesResponse | null): void {
  if (!response || response.score === null) {
    badge.textContent = "no score";
    badge.dataset.decision = "";
    return;
  }
  badge.textContent = `${verbatim(response.score)} (${verbatim(response.decision)})`;
  badge.dataset.decision = response.decision ?? "";
}

export function renderErrorBanner(banner: HTMLElement, message: string | null): void {
  banner.textContent = message ?? "";
  banner.style.display = message ? "block" : "none";
}

export function drawContours(
  canvas: HTMLCanvasElement,
  segmentation: SegmentResponse | null,
  selectedLabel: number | null,
  dimmed: boolean,
): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  if (!segmentation) return;
  ctx.globalAlpha = dimmed ? 0.4 : 1.0;
  for (const roi of segmentation.rois) {
    const contour = roi.contour ?? [];
    if (contour.length < 2) continue;
    ctx.beginPath();
    ctx.moveTo(contour[0][1], contour[0][0]); // payload is (row, col)
    for (const [row, col] of contour.slice(1)) ctx.lineTo(col, row);
    ctx.closePath();
    ctx.strokeStyle = roi.label === selectedLabel ? "#ff5252" : "#4fc3f7";
    ctx.lineWidth = roi.label === selectedLabel ? 2 : 1;
    ctx.stroke();
  }
  ctx.globalAlpha = 1.0;
}

/** Hit-test a canvas click ((x, y) = (col, row)) against ROI contours. */
export function roiAtPoint(segmentation: SegmentResponse, x: number, y: number): RoiPayload | null {
  for (const roi of segmentation.rois) {
    const contour = roi.contour ?? [];
    if (contour.length >= 3 && pointInPolygon(y, x, contour)) return roi;
  }
  return null;
}

function pointInPolygon(row: number, col: number, polygon: [number, number][]): boolean {
  let inside = false;
  for (let i = 0, j = polygon.length - 1; i < polygon.length; j = i++) {
    const [ri, ci] = polygon[i];
    const [rj, cj] = polygon[j];
    if (ri > row !== rj > row && col < ((cj - ci) * (row - ri)) / (rj - ri) + ci) {
      inside = !inside;
    }
  }
  return inside;
}
