// Wire types mirroring the session endpoints. The UI never invents state:
// everything here is exactly what GET /sessions/{id} returns.

export interface ProposalOption {
  id: string;
  name: string;
  description: string;
}

export interface Proposal {
  stage: string;
  options: ProposalOption[];
  selected: string[];
  rationale: string;
}

export interface ExecutionResult {
  kind: "route" | "table" | "text" | "findings" | string;
  payload: Record<string, unknown>;
  provenance: [string, string][];
}

export interface SessionView {
  id: string;
  query: string;
  mode: "automatic" | "control";
  stage: string;
  selections: Record<string, string[]>;
  pending: Proposal | null;
  result: ExecutionResult | null;
  log: Record<string, unknown>[];
}

export interface ApiError {
  code: string;
  message: string;
}

export const STAGE_ORDER = [
  "Classify",
  "SelectSources",
  "SelectResources",
  "SelectAttributes",
  "SelectInterfaces",
  "Execute",
  "Done",
  "Failed",
] as const;

export interface TableDict {
  name: string;
  columns: { name: string; type: string }[];
  rows: (string | number | boolean)[][];
}

export interface FeatureCollection {
  type: "FeatureCollection";
  features: {
    type: "Feature";
    geometry: { type: string; coordinates: unknown };
    properties?: Record<string, unknown>;
  }[];
}
