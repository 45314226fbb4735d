// DOM wiring for the control-mode stepper. All state lives in the latest
// SessionView plus the unsent draft; every render starts from scratch.

import { ApiFailure, SessionApi, freshRequestId } from "./api.js";
import { drawLayer } from "./mapview.js";
import { buildResultView, sortGrid, type GridModel, type ResultView } from "./resultview.js";
import { buildStepperModel, modifyPayload, toggleSelection } from "./stepper.js";
import type { SessionView } from "./types.js";

interface AppConfig {
  serverBaseUrl: string;
  tileUrl: string | null;
}

declare global {
  interface Window {
    QUERYNAV_CONFIG?: Partial<AppConfig>;
  }
}

const config: AppConfig = {
  serverBaseUrl: window.QUERYNAV_CONFIG?.serverBaseUrl ?? "http://127.0.0.1:8080",
  tileUrl: window.QUERYNAV_CONFIG?.tileUrl ?? null,
};

const api = new SessionApi(config.serverBaseUrl);

let session: SessionView | null = null;
let draft: Record<string, string[]> = {};
let lastError: string | null = null;
let resultView: ResultView | null = null;

const root = document.getElementById("app") as HTMLElement;

function el(tag: string, attrs: Record<string, string> = {}, text = ""): HTMLElement {
  const node = document.createElement(tag);
  for (const [k, v] of Object.entries(attrs)) {
    node.setAttribute(k, v);
  }
  if (text) {
    node.textContent = text;
  }
  return node;
}

async function refresh(next: SessionView): Promise<void> {
  session = next;
  lastError = null;
  if (session.stage === "Done" && session.result) {
    resultView = buildResultView(session.result);
  }
  render();
  // automatic sessions and un-proposed control stages need another poke
  if (session.stage !== "Done" && session.stage !== "Failed") {
    if (session.mode === "automatic" || session.pending === null) {
      await act(null);
    }
  }
}

async function act(override: string[] | null): Promise<void> {
  if (!session) {
    return;
  }
  try {
    const next = await api.advance(session.id, override, freshRequestId());
    draft = {};
    await refresh(next);
  } catch (error) {
    if (error instanceof ApiFailure && error.status === 422) {
      lastError = `${error.code}: ${error.message}`;
      render(); // stage stays editable with the error inline
    } else {
      lastError = String(error);
      render();
    }
  }
}

function render(): void {
  root.replaceChildren();
  if (!session) {
    renderLaunch();
    return;
  }
  const model = buildStepperModel(session, draft, lastError);
  const header = el("div", { class: "header" });
  header.append(
    el("h2", {}, `Session ${model.sessionId.slice(0, 8)} (${model.mode})`),
    el("p", { class: "query" }, model.query),
    el("p", { class: "stage" }, `Stage: ${model.stage}`),
  );
  root.append(header);
  if (model.error) {
    root.append(el("p", { class: "error" }, model.error));
  }

  for (const row of model.rows) {
    const section = el("section", { class: `stagegroup ${row.status}` });
    section.append(el("h3", {}, `${row.stage} (${row.status})`));
    if (row.status === "committed") {
      section.append(el("p", {}, row.committed.join(", ") || "(nothing)"));
    } else if (row.status === "editable") {
      if (row.rationale) {
        section.append(el("p", { class: "rationale" }, row.rationale));
      }
      const list = el("div", { class: "options" });
      for (const option of row.options) {
        const label = el("label", { title: option.description });
        const box = el("input", { type: "checkbox" }) as HTMLInputElement;
        box.checked = option.checked;
        box.addEventListener("change", () => {
          const current =
            draft[row.stage] ?? row.options.filter((o) => o.checked).map((o) => o.id);
          draft = { ...draft, [row.stage]: toggleSelection(current, option.id) };
          render();
        });
        label.append(box, document.createTextNode(` ${option.name}`));
        list.append(label, el("br"));
      }
      section.append(list);
      const accept = el("button", {}, "Accept") as HTMLButtonElement;
      accept.addEventListener("click", () => void act(null));
      const modify = el("button", {}, "Apply selection") as HTMLButtonElement;
      modify.addEventListener("click", () => {
        if (!session?.pending) {
          return;
        }
        const chosen =
          draft[row.stage] ?? row.options.filter((o) => o.checked).map((o) => o.id);
        void act(modifyPayload(session.pending, chosen));
      });
      section.append(accept, modify);
    }
    root.append(section);
  }

  if (model.failed) {
    root.append(el("p", { class: "error" }, "Session failed; see the log."));
  }
  if (model.finished && resultView) {
    renderResult(resultView);
  }
}

function renderResult(view: ResultView): void {
  const section = el("section", { class: "result" });
  section.append(el("h3", {}, "Result"));
  if (view.kind === "route" || view.kind === "findings") {
    const canvas = el("canvas", { width: "720", height: "480" }) as HTMLCanvasElement;
    section.append(canvas);
    drawLayer(canvas, view.map, { tileUrl: config.tileUrl });
    section.append(el("p", {}, view.text));
    if (view.kind === "findings") {
      section.append(renderGrid(view.grid, (g) => {
        if (resultView?.kind === "findings") {
          resultView = { ...resultView, grid: g };
          render();
        }
      }));
    }
  } else if (view.kind === "table") {
    section.append(
      renderGrid(view.grid, (g) => {
        if (resultView?.kind === "table") {
          resultView = { ...resultView, grid: g };
          render();
        }
      }),
    );
  } else if (view.kind === "text") {
    section.append(el("pre", {}, view.text));
  } else {
    section.append(el("pre", {}, view.json));
  }
  root.append(section);
}

function renderGrid(grid: GridModel, onSort: (g: GridModel) => void): HTMLElement {
  const table = el("table", { class: "grid" });
  const head = el("tr");
  for (const column of grid.columns) {
    const th = el("th", {}, column);
    th.addEventListener("click", () => onSort(sortGrid(grid, column)));
    head.append(th);
  }
  table.append(head);
  for (const row of grid.rows) {
    const tr = el("tr");
    for (const cell of row) {
      tr.append(el("td", {}, String(cell)));
    }
    table.append(tr);
  }
  return table;
}

function renderLaunch(): void {
  const form = el("div", { class: "launch" });
  const input = el("input", {
    type: "text",
    size: "80",
    placeholder: "Ask about routes, incidents, regulations...",
  }) as HTMLInputElement;
  const go = el("button", {}, "Start control session") as HTMLButtonElement;
  go.addEventListener("click", async () => {
    if (!input.value.trim()) {
      return;
    }
    try {
      const created = await api.createSession(input.value, "control");
      await refresh(created);
    } catch (error) {
      root.append(el("p", { class: "error" }, String(error)));
    }
  });
  form.append(el("h2", {}, "querynav"), input, go);
  root.append(form);
}

render();
