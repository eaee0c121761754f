// Top-down scene view. buildDrawCommands is a pure function of the scene
// snapshot: same snapshot in, byte-identical command list out, so rendering
// is screenshot-stable and testable without a canvas.

import type { SceneSnapshot, VehicleInfo } from "./types";

export interface Viewport {
  width: number;
  height: number;
  padding: number;
}

export const DEFAULT_VIEWPORT: Viewport = { width: 800, height: 500, padding: 24 };

// length, width, height fallback when the export document has not been
// fetched yet (scene snapshots carry poses, not asset dimensions)
export const DEFAULT_DIMENSIONS: [number, number, number] = [4.5, 1.9, 1.5];

const FRUSTUM_RANGE = 10; // m
const ARROW_LENGTH = 3; // m, heading indicator from the vehicle center

export type Point = [number, number];

export type DrawCommand =
  | { kind: "clear"; width: number; height: number; fill: string }
  | { kind: "segment"; from: Point; to: Point; stroke: string; width: number }
  | { kind: "polyline"; points: Point[]; stroke: string; width: number }
  | { kind: "polygon"; points: Point[]; fill: string; stroke: string }
  | { kind: "wedge"; points: Point[]; fill: string };

export type DimensionLookup = Record<string, [number, number, number]>;

interface Transform {
  scale: number;
  minX: number;
  minY: number;
  viewport: Viewport;
}

export function buildDrawCommands(
  scene: SceneSnapshot,
  dims: DimensionLookup = {},
  viewport: Viewport = DEFAULT_VIEWPORT,
): DrawCommand[] {
  const tf = fitTransform(scene, viewport);
  const out: DrawCommand[] = [
    { kind: "clear", width: viewport.width, height: viewport.height, fill: "#fafafa" },
  ];

  for (const node of scene.lane_map.nodes) {
    out.push({
      kind: "segment",
      from: toCanvas(node.start, tf),
      to: toCanvas(node.end, tf),
      stroke: node.type === "centerline" ? "#8a8a8a" : "#444444",
      width: node.type === "centerline" ? 2 : 1,
    });
  }

  for (const vehicle of scene.vehicles) {
    if (!vehicle.trajectory || vehicle.trajectory.samples.length < 2) continue;
    out.push({
      kind: "polyline",
      points: vehicle.trajectory.samples.map((s) => toCanvas([s[1], s[2]], tf)),
      stroke: "#3a7bd5",
      width: 1.5,
    });
  }

  for (const vehicle of scene.vehicles) {
    const [l, w] = dims[vehicle.asset_id] ?? DEFAULT_DIMENSIONS;
    out.push({
      kind: "polygon",
      points: vehicleCorners(vehicle, l, w).map((p) => toCanvas(p, tf)),
      fill: vehicle.attributes["crazy_mode"] === true ? "#d64545" : "#2e8b57",
      stroke: "#111111",
    });
    out.push({
      kind: "segment",
      from: toCanvas([vehicle.pose[0], vehicle.pose[1]], tf),
      to: toCanvas(headingTip(vehicle), tf),
      stroke: "#111111",
      width: 1.5,
    });
  }

  const wedge = frustumWedge(scene, tf);
  if (wedge) out.push(wedge);
  return out;
}

export function renderTopdown(
  ctx: CanvasRenderingContext2D,
  commands: DrawCommand[],
): void {
  for (const cmd of commands) {
    switch (cmd.kind) {
      case "clear":
        ctx.fillStyle = cmd.fill;
        ctx.fillRect(0, 0, cmd.width, cmd.height);
        break;
      case "segment":
        ctx.strokeStyle = cmd.stroke;
        ctx.lineWidth = cmd.width;
        ctx.beginPath();
        ctx.moveTo(cmd.from[0], cmd.from[1]);
        ctx.lineTo(cmd.to[0], cmd.to[1]);
        ctx.stroke();
        break;
      case "polyline":
        ctx.strokeStyle = cmd.stroke;
        ctx.lineWidth = cmd.width;
        tracePath(ctx, cmd.points, false);
        ctx.stroke();
        break;
      case "polygon":
        ctx.fillStyle = cmd.fill;
        ctx.strokeStyle = cmd.stroke;
        tracePath(ctx, cmd.points, true);
        ctx.fill();
        ctx.stroke();
        break;
      case "wedge":
        ctx.fillStyle = cmd.fill;
        tracePath(ctx, cmd.points, true);
        ctx.fill();
        break;
    }
  }
}

function tracePath(ctx: CanvasRenderingContext2D, points: Point[], close: boolean) {
  ctx.beginPath();
  points.forEach(([x, y], i) => (i === 0 ? ctx.moveTo(x, y) : ctx.lineTo(x, y)));
  if (close) ctx.closePath();
}

function fitTransform(scene: SceneSnapshot, viewport: Viewport): Transform {
  const xs: number[] = [];
  const ys: number[] = [];
  const take = (x: number, y: number) => {
    xs.push(x);
    ys.push(y);
  };
  for (const node of scene.lane_map.nodes) {
    take(node.start[0], node.start[1]);
    take(node.end[0], node.end[1]);
  }
  for (const vehicle of scene.vehicles) {
    take(vehicle.pose[0], vehicle.pose[1]);
    for (const s of vehicle.trajectory?.samples ?? []) take(s[1], s[2]);
  }
  for (const cam of scene.cameras.items) take(cam.extrinsic.translation[0], cam.extrinsic.translation[1]);
  if (xs.length === 0) {
    take(-10, -10);
    take(10, 10);
  }

  const minX = Math.min(...xs) - 2;
  const maxX = Math.max(...xs) + 2;
  const minY = Math.min(...ys) - 2;
  const maxY = Math.max(...ys) + 2;
  const scale = Math.min(
    (viewport.width - 2 * viewport.padding) / (maxX - minX),
    (viewport.height - 2 * viewport.padding) / (maxY - minY),
  );
  return { scale, minX, minY, viewport };
}

function toCanvas([x, y]: [number, number] | number[], tf: Transform): Point {
  // world y points left; canvas y points down
  const cx = tf.viewport.padding + (x - tf.minX) * tf.scale;
  const cy = tf.viewport.height - tf.viewport.padding - (y - tf.minY) * tf.scale;
  return [round2(cx), round2(cy)];
}

function vehicleCorners(vehicle: VehicleInfo, length: number, width: number): Point[] {
  const [x, y, heading] = vehicle.pose;
  const c = Math.cos(heading);
  const s = Math.sin(heading);
  const hl = length / 2;
  const hw = width / 2;
  const local: Point[] = [
    [hl, hw],
    [hl, -hw],
    [-hl, -hw],
    [-hl, hw],
  ];
  return local.map(([lx, ly]) => [x + c * lx - s * ly, y + s * lx + c * ly]);
}

function headingTip(vehicle: VehicleInfo): Point {
  const [x, y, heading] = vehicle.pose;
  return [x + ARROW_LENGTH * Math.cos(heading), y + ARROW_LENGTH * Math.sin(heading)];
}

function frustumWedge(scene: SceneSnapshot, tf: Transform): DrawCommand | null {
  const cam = scene.cameras.items.find((c) => c.id === scene.cameras.reference);
  if (!cam) return null;
  const R = cam.extrinsic.rotation;
  const t = cam.extrinsic.translation;
  // optical axis is camera +z expressed in the world frame
  const axis = Math.atan2(R[1][2], R[0][2]);
  const halfFov = Math.atan(cam.image_size[0] / 2 / cam.intrinsics[0]);
  const apex: [number, number] = [t[0], t[1]];
  const edge = (a: number): [number, number] => [
    apex[0] + FRUSTUM_RANGE * Math.cos(a),
    apex[1] + FRUSTUM_RANGE * Math.sin(a),
  ];
  return {
    kind: "wedge",
    points: [
      toCanvas(apex, tf),
      toCanvas(edge(axis - halfFov), tf),
      toCanvas(edge(axis + halfFov), tf),
    ],
    fill: "rgba(80, 120, 220, 0.25)",
  };
}

function round2(v: number): number {
  return Math.round(v * 100) / 100;
}
