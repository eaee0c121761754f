// Hand-pinned copies of real service responses, used as test fixtures.

import type { RoundSummary, SceneSnapshot } from "../src/types";

export function demoSnapshot(): SceneSnapshot {
  return {
    lane_map: {
      frame: "world",
      nodes: [
        { start: [0, 0], end: [40, 0], type: "centerline" },
        { start: [43.5, 3.5], end: [3.5, 3.5], type: "centerline" },
        { start: [0, -1.75], end: [40, -1.75], type: "boundary" },
      ],
    },
    cameras: {
      reference: "front",
      items: [
        {
          id: "front",
          intrinsics: [320, 320, 320, 240],
          image_size: [640, 480],
          extrinsic: {
            // camera +z (optical axis) pointing along world +x
            rotation: [
              [0, 0, 1],
              [-1, 0, 0],
              [0, -1, 0],
            ],
            translation: [1.5, 0, 1.6],
          },
          exposure: 0.02,
        },
      ],
    },
    vehicles: [
      {
        instance_id: "veh001",
        asset_id: "car_mini",
        pose: [20, 0, 0],
        trajectory: {
          dt: 0.1,
          samples: [
            [0, 20, 0, 0],
            [1, 28, 0, 0],
            [2, 36, 0, 0],
          ],
        },
        attributes: { type: "car", speed: 8.0 },
      },
      {
        instance_id: "veh002",
        asset_id: "car_porsche_911",
        pose: [30, 3.5, Math.PI],
        trajectory: null,
        attributes: { type: "porsche", crazy_mode: true },
      },
    ],
    deleted_ids: [],
    ego_trajectory: null,
    skydome_path: null,
    history: [],
  };
}

/** Decomposition of the four-part mixed command: delete all, two adds,
 *  one view change. Copied from a live round summary. */
export function mixedRoundSummary(): RoundSummary {
  const porsche = {
    action: "add",
    target: null,
    parameters: { type: "porsche", driving_direction: "toward_ego", speed: 12.0 },
    round: 1,
  };
  const police = {
    action: "add",
    target: null,
    parameters: {
      relation: { kind: "behind", ref: "the porsche" },
      type: "police car",
    },
    round: 1,
  };
  return {
    session: "abc123",
    round: 1,
    configs_by_role: {
      background_render: [],
      vehicle_delete: [{ action: "delete", target: "all", parameters: {}, round: 1 }],
      asset_manage: [porsche, police],
      vehicle_motion: [porsche, police],
      foreground_render: [porsche, police],
      view_adjust: [
        {
          action: "view_change",
          target: null,
          parameters: { forward: 5.0, up: 0.5 },
          round: 1,
        },
      ],
    },
    violations: [],
    frame_count: 4,
    frames: [0, 1, 2, 3].map((i) => `/sessions/abc123/frames/${i}`),
    vehicles: ["veh002", "veh003"],
    deleted_ids: ["veh001"],
    warnings: [],
  };
}
