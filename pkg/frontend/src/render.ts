/** Map-less canvas renderer: occupancy cells as colored rectangles projected
 * equirectangularly into the viewport, the drawn polygon as an outline. */

import type { OccupancyLayer } from "./occupancy.js";
import type { LatLon } from "./geometry.js";
import type { BBox } from "./types.js";

export class CanvasMap {
  private readonly ctx: CanvasRenderingContext2D;

  constructor(private readonly canvas: HTMLCanvasElement) {
    const ctx = canvas.getContext("2d");
    if (!ctx) throw new Error("canvas 2d context unavailable");
    this.ctx = ctx;
  }

  private toPixel(viewport: BBox, lat: number, lon: number): [number, number] {
    const x = ((lon - viewport.minLon) / (viewport.maxLon - viewport.minLon)) * this.canvas.width;
    const y =
      this.canvas.height -
      ((lat - viewport.minLat) / (viewport.maxLat - viewport.minLat)) * this.canvas.height;
    return [x, y];
  }

  pixelToLatLon(viewport: BBox, px: number, py: number): LatLon {
    const lon = viewport.minLon + (px / this.canvas.width) * (viewport.maxLon - viewport.minLon);
    const lat =
      viewport.minLat +
      ((this.canvas.height - py) / this.canvas.height) * (viewport.maxLat - viewport.minLat);
    return [lat, lon];
  }

  drawLayer(viewport: BBox, layer: OccupancyLayer, polygon: LatLon[]): void {
    const { ctx } = this;
    ctx.clearRect(0, 0, this.canvas.width, this.canvas.height);
    for (const cell of layer.cells) {
      ctx.beginPath();
      cell.ring.forEach(([lon, lat], i) => {
        const [x, y] = this.toPixel(viewport, lat, lon);
        if (i === 0) ctx.moveTo(x, y);
        else ctx.lineTo(x, y);
      });
      ctx.closePath();
      ctx.globalAlpha = 0.6;
      ctx.fillStyle = cell.color;
      ctx.fill();
      ctx.globalAlpha = 1.0;
    }
    if (polygon.length > 1) {
      ctx.beginPath();
      polygon.forEach(([lat, lon], i) => {
        const [x, y] = this.toPixel(viewport, lat, lon);
        if (i === 0) ctx.moveTo(x, y);
        else ctx.lineTo(x, y);
      });
      ctx.strokeStyle = "#1565c0";
      ctx.lineWidth = 2;
      ctx.stroke();
    }
  }
}

export function renderLegend(container: HTMLElement, layer: OccupancyLayer): void {
  container.replaceChildren();
  for (const entry of layer.legend) {
    const item = document.createElement("span");
    item.className = "legend-item";
    const swatch = document.createElement("span");
    swatch.className = "legend-swatch";
    swatch.style.backgroundColor = entry.color;
    item.append(swatch, ` ${entry.low.toFixed(1)}–${entry.high.toFixed(1)}`);
    container.append(item);
  }
}
