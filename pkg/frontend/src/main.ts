// DOM wiring. Everything stateful lives in a ConsoleState value; each
// event handler computes the next state with the pure functions from
// console.ts and then re-renders.

import { ApiError, SessionClient } from "./api";
import {
  applyRoundFailure,
  applyRoundSuccess,
  beginSubmit,
  formatCardTitle,
  formatErrorText,
  initialState,
  selectFrame,
  type ConsoleState,
} from "./console";
import { buildDrawCommands, renderTopdown } from "./topdown";

const client = new SessionClient("");
let state: ConsoleState = initialState();

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

const commandInput = el<HTMLInputElement>("command-input");
const submitButton = el<HTMLButtonElement>("submit-button");
const remoteToggle = el<HTMLInputElement>("remote-toggle");
const remoteEndpoint = el<HTMLInputElement>("remote-endpoint");
const errorBox = el<HTMLDivElement>("error-box");
const roundsBox = el<HTMLDivElement>("rounds");
const canvas = el<HTMLCanvasElement>("topdown");
const frameImage = el<HTMLImageElement>("frame-image");
const framePrev = el<HTMLButtonElement>("frame-prev");
const frameNext = el<HTMLButtonElement>("frame-next");
const frameLabel = el<HTMLSpanElement>("frame-label");

async function boot(): Promise<void> {
  const id = await client.createSession({ seed: 0 });
  const scene = await client.getScene(id);
  state = { ...state, sessionId: id, scene, snapshotVersion: 1 };
  render();
}

async function onSubmit(): Promise<void> {
  const next = beginSubmit(state);
  if (!next) return; // one in-flight command per session
  state = next;
  render();
  const text = commandInput.value.trim();
  try {
    const backend = remoteToggle.checked
      ? { kind: "remote_model" as const, endpoint: remoteEndpoint.value }
      : null;
    const summary = await client.sendCommand(state.sessionId!, text, {
      render: true,
      backend,
    });
    const [scene, exportDoc] = await Promise.all([
      client.getScene(state.sessionId!),
      client.getExport(state.sessionId!),
    ]);
    state = applyRoundSuccess(state, text, summary, scene, exportDoc);
    commandInput.value = "";
  } catch (err) {
    state = applyRoundFailure(state, err instanceof ApiError ? err.detail : { error: String(err) });
  }
  render();
}

function render(): void {
  submitButton.disabled = state.busy || state.sessionId === null;
  errorBox.textContent = state.inlineError ? formatErrorText(state.inlineError) : "";
  errorBox.style.display = state.inlineError ? "block" : "none";

  roundsBox.replaceChildren(
    ...state.rounds.map((round) => {
      const section = document.createElement("section");
      section.className = "round";
      const heading = document.createElement("h3");
      heading.textContent = `round ${round.summary.round}: ${round.text}`;
      section.appendChild(heading);
      for (const card of round.cards) {
        const div = document.createElement("div");
        div.className = "config-card";
        const title = document.createElement("strong");
        title.textContent = formatCardTitle(card);
        const roles = document.createElement("em");
        roles.textContent = card.roles.join(", ");
        const params = document.createElement("pre");
        params.textContent = JSON.stringify(card.parameters, null, 1);
        div.append(title, roles, params);
        section.appendChild(div);
      }
      return section;
    }),
  );

  if (state.scene) {
    const ctx = canvas.getContext("2d");
    if (ctx) renderTopdown(ctx, buildDrawCommands(state.scene, state.dimensions));
  }

  const hasFrames = state.frameCount > 0 && state.sessionId !== null;
  framePrev.disabled = frameNext.disabled = !hasFrames;
  frameLabel.textContent = hasFrames
    ? `frame ${state.selectedFrame + 1} / ${state.frameCount}`
    : "no frames";
  frameImage.src = hasFrames ? client.frameUrl(state.sessionId!, state.selectedFrame) : "";
  frameImage.style.display = hasFrames ? "block" : "none";
}

submitButton.addEventListener("click", () => void onSubmit());
commandInput.addEventListener("keydown", (e) => {
  if (e.key === "Enter") void onSubmit();
});
framePrev.addEventListener("click", () => {
  state = selectFrame(state, state.selectedFrame - 1);
  render();
});
frameNext.addEventListener("click", () => {
  state = selectFrame(state, state.selectedFrame + 1);
  render();
});

void boot().catch((err) => {
  errorBox.textContent = `failed to start session: ${err}`;
  errorBox.style.display = "block";
});
