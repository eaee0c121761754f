// View model for the console: plain data plus pure transition functions.
// The DOM layer (main.ts) only ever calls these and redraws; all scene
// mutation happens server-side.

import type {
  CommandErrorDetail,
  EditConfig,
  ExportDocument,
  RoundSummary,
  SceneSnapshot,
} from "./types";
import type { DimensionLookup } from "./topdown";

// pipeline order used to lay out config cards deterministically
export const ROLE_ORDER = [
  "project_manager",
  "vehicle_delete",
  "asset_manage",
  "vehicle_motion",
  "foreground_render",
  "background_render",
  "view_adjust",
] as const;

export interface ConfigCard {
  action: string;
  target: string | null;
  parameters: Record<string, unknown>;
  round: number;
  roles: string[];
}

export interface RoundLog {
  text: string;
  summary: RoundSummary;
  cards: ConfigCard[];
}

export interface ConsoleState {
  sessionId: string | null;
  scene: SceneSnapshot | null;
  snapshotVersion: number;
  dimensions: DimensionLookup;
  rounds: RoundLog[];
  inlineError: CommandErrorDetail | null;
  busy: boolean;
  remoteEndpoint: string | null;
  frameCount: number;
  selectedFrame: number;
}

export function initialState(): ConsoleState {
  return {
    sessionId: null,
    scene: null,
    snapshotVersion: 0,
    dimensions: {},
    rounds: [],
    inlineError: null,
    busy: false,
    remoteEndpoint: null,
    frameCount: 0,
    selectedFrame: 0,
  };
}

/** One agent card per distinct config; a config handled by several roles
 *  gets a single card listing all of them. */
export function configCards(summary: RoundSummary): ConfigCard[] {
  const cards: ConfigCard[] = [];
  const index = new Map<string, ConfigCard>();
  for (const role of ROLE_ORDER) {
    for (const config of summary.configs_by_role[role] ?? []) {
      const key = configKey(config);
      const existing = index.get(key);
      if (existing) {
        existing.roles.push(role);
      } else {
        const card: ConfigCard = {
          action: config.action,
          target: config.target,
          parameters: config.parameters,
          round: config.round,
          roles: [role],
        };
        index.set(key, card);
        cards.push(card);
      }
    }
  }
  return cards;
}

function configKey(config: EditConfig): string {
  return JSON.stringify([config.action, config.target, canonical(config.parameters), config.round]);
}

function canonical(value: unknown): unknown {
  if (Array.isArray(value)) return value.map(canonical);
  if (value && typeof value === "object") {
    const out: Record<string, unknown> = {};
    for (const key of Object.keys(value).sort()) {
      out[key] = canonical((value as Record<string, unknown>)[key]);
    }
    return out;
  }
  return value;
}

/** Returns the busy state for an accepted submission, or null while another
 *  command is in flight (mirrors the server's 409 single-writer contract). */
export function beginSubmit(state: ConsoleState): ConsoleState | null {
  if (state.busy || state.sessionId === null) return null;
  return { ...state, busy: true, inlineError: null };
}

export function applyRoundSuccess(
  state: ConsoleState,
  text: string,
  summary: RoundSummary,
  scene: SceneSnapshot,
  exportDoc: ExportDocument | null = null,
): ConsoleState {
  const dimensions = { ...state.dimensions };
  for (const asset of exportDoc?.assets ?? []) {
    dimensions[asset.asset_id] = asset.dimensions;
  }
  return {
    ...state,
    busy: false,
    inlineError: null,
    scene,
    snapshotVersion: state.snapshotVersion + 1,
    dimensions,
    rounds: [...state.rounds, { text, summary, cards: configCards(summary) }],
    frameCount: summary.frame_count,
    selectedFrame: 0,
  };
}

/** A failed round surfaces the error inline; the snapshot is untouched
 *  because the server rolled the whole round back. */
export function applyRoundFailure(
  state: ConsoleState,
  detail: CommandErrorDetail | null,
): ConsoleState {
  return {
    ...state,
    busy: false,
    inlineError: detail ?? { error: "command failed" },
  };
}

export function selectFrame(state: ConsoleState, n: number): ConsoleState {
  if (state.frameCount === 0) return state;
  const clamped = Math.min(Math.max(n, 0), state.frameCount - 1);
  return { ...state, selectedFrame: clamped };
}

export function formatCardTitle(card: ConfigCard): string {
  const target = card.target ? ` ${card.target}` : "";
  return `${card.action}${target}`;
}

export function formatErrorText(detail: CommandErrorDetail): string {
  const parts = [detail.error];
  if (detail.clause) parts.push(`clause: "${detail.clause}"`);
  if (detail.rule_hint) parts.push(detail.rule_hint);
  return parts.join(" | ");
}
