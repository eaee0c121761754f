// Wire types for the session service JSON API. These mirror the documents
// described in docs/scene_schema.md and docs/command_grammar.md.

export interface LaneNode {
  start: [number, number];
  end: [number, number];
  type: string;
}

export interface Trajectory {
  dt: number;
  samples: number[][]; // [t, x, y, heading]
}

export interface CameraInfo {
  id: string;
  intrinsics: [number, number, number, number]; // fx, fy, cx, cy
  image_size: [number, number];
  extrinsic: { rotation: number[][]; translation: number[] };
  exposure: number;
}

export interface VehicleInfo {
  instance_id: string;
  asset_id: string;
  pose: [number, number, number]; // x, y, heading
  trajectory: Trajectory | null;
  attributes: Record<string, unknown>;
}

export interface SceneSnapshot {
  lane_map: { frame: string; nodes: LaneNode[] };
  cameras: { reference: string; items: CameraInfo[] };
  vehicles: VehicleInfo[];
  deleted_ids: string[];
  ego_trajectory: Trajectory | null;
  skydome_path: string | null;
  history: EditConfig[];
}

export interface EditConfig {
  action: string;
  target: string | null;
  parameters: Record<string, unknown>;
  round: number;
}

export interface RoundSummary {
  session: string;
  round: number;
  configs_by_role: Record<string, EditConfig[]>;
  violations: string[];
  frame_count: number;
  frames: string[];
  vehicles: string[];
  deleted_ids: string[];
  warnings: string[];
}

export interface ExportAsset {
  instance_id: string;
  asset_id: string;
  mesh_path: string | null;
  pose: [number, number, number];
  color: [number, number, number];
  color_name: string | null;
  dimensions: [number, number, number]; // length, width, height
  trajectory: Trajectory | null;
}

export interface ExportDocument {
  version: number;
  cameras: CameraInfo[];
  reference_camera: string;
  assets: ExportAsset[];
  deleted_ids: string[];
  environment: { skydome_path: string | null; probes: Record<string, unknown> };
}

// 422 detail body; parse errors carry the offending clause and a rule hint.
export interface CommandErrorDetail {
  error: string;
  kind?: string;
  clause?: string;
  rule_hint?: string;
  role?: string;
  config?: EditConfig | null;
}

export interface InterpreterBackend {
  kind: "grammar" | "remote_model";
  endpoint?: string;
  timeout?: number;
}
