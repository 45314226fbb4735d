// Stepper view model: which stages are locked, which one is editable, and
// what the dropdowns show. The model is a pure function of the latest
// server response plus the user's unsent draft, so a refresh loses nothing
// but the draft.

import type { Proposal, SessionView } from "./types.js";
import { STAGE_ORDER } from "./types.js";

export interface StageRow {
  stage: string;
  status: "committed" | "editable" | "upcoming" | "terminal";
  options: { id: string; name: string; description: string; checked: boolean }[];
  committed: string[];
  rationale: string;
}

export interface StepperModel {
  sessionId: string;
  query: string;
  mode: string;
  stage: string;
  rows: StageRow[];
  finished: boolean;
  failed: boolean;
  /** Inline error from the last action, if any; stage stays editable. */
  error: string | null;
}

const SELECTION_STAGES = STAGE_ORDER.slice(0, 5) as readonly string[];

export function buildStepperModel(
  session: SessionView,
  draft: Record<string, string[]> = {},
  error: string | null = null,
): StepperModel {
  const rows: StageRow[] = [];
  for (const stage of SELECTION_STAGES) {
    const committed = session.selections[stage];
    if (committed !== undefined) {
      rows.push({
        stage,
        status: "committed",
        committed,
        rationale: "",
        options: [],
      });
      continue;
    }
    if (session.pending && session.pending.stage === stage) {
      const chosen = new Set(draft[stage] ?? session.pending.selected);
      rows.push({
        stage,
        status: "editable",
        committed: [],
        rationale: session.pending.rationale,
        options: session.pending.options.map((option) => ({
          ...option,
          checked: chosen.has(option.id),
        })),
      });
      continue;
    }
    rows.push({ stage, status: "upcoming", committed: [], rationale: "", options: [] });
  }
  return {
    sessionId: session.id,
    query: session.query,
    mode: session.mode,
    stage: session.stage,
    rows,
    finished: session.stage === "Done",
    failed: session.stage === "Failed",
    error,
  };
}

/** Body for an Accept action: empty override means "take the proposal". */
export function acceptPayload(): string[] | null {
  return null;
}

/**
 * Body for a Modify action: the edited selection, which must stay within
 * the proposed options (the server answers 422 otherwise and the stage
 * stays editable).
 */
export function modifyPayload(proposal: Proposal, chosen: string[]): string[] {
  const offered = new Set(proposal.options.map((o) => o.id));
  return chosen.filter((id) => offered.has(id));
}

/** Toggle one option id inside a draft selection. */
export function toggleSelection(current: string[], id: string): string[] {
  return current.includes(id) ? current.filter((x) => x !== id) : [...current, id];
}

/** True when the session still needs advance() calls to make progress. */
export function needsAdvance(session: SessionView): boolean {
  if (session.stage === "Done" || session.stage === "Failed") {
    return false;
  }
  return !(session.mode === "control" && session.pending !== null);
}

export function stageIndex(stage: string): number {
  return STAGE_ORDER.indexOf(stage as (typeof STAGE_ORDER)[number]);
}
