import { describe, expect, it } from "vitest";

import { ApiFailure, SessionApi, freshRequestId } from "../src/api.js";
import {
  acceptPayload,
  buildStepperModel,
  modifyPayload,
  needsAdvance,
  toggleSelection,
} from "../src/stepper.js";
import type { SessionView } from "../src/types.js";
import { FakeServer, ROUTE_RESULT, twoStageScript } from "./fakeserver.js";

function api(server: FakeServer): SessionApi {
  return new SessionApi("http://fake", server.fetcher);
}

async function acceptAll(client: SessionApi, id: string): Promise<SessionView> {
  let session = await client.getSession(id);
  let guard = 0;
  while (session.stage !== "Done" && session.stage !== "Failed") {
    session = await client.advance(id, null, freshRequestId("t"));
    guard += 1;
    if (guard > 20) {
      throw new Error("did not finish");
    }
  }
  return session;
}

describe("stepper flow", () => {
  it("accept-all commits exactly the agent selections", async () => {
    const server = new FakeServer(twoStageScript(), ROUTE_RESULT);
    const client = api(server);
    const created = await client.createSession("route please", "control");
    const finished = await acceptAll(client, created.id);
    expect(finished.stage).toBe("Done");
    expect(finished.selections).toEqual({
      Classify: ["tt_route", "ob_safety"],
      SelectSources: ["ds_roads", "ds_docs"],
    });
    const result = await client.getResult(created.id);
    expect(result).toEqual(ROUTE_RESULT);
  });

  it("a modified selection is committed verbatim", async () => {
    const server = new FakeServer(twoStageScript(), ROUTE_RESULT);
    const client = api(server);
    const created = await client.createSession("route please", "control");
    let session = await client.advance(created.id, null); // proposal
    expect(session.pending?.stage).toBe("Classify");
    session = await client.advance(created.id, null); // accept classify
    session = await client.advance(created.id, null); // proposal for sources
    const pending = session.pending!;
    // deselect one proposed source, then apply
    const chosen = toggleSelection([...pending.selected], "ds_docs");
    session = await client.advance(created.id, modifyPayload(pending, chosen));
    expect(session.selections.SelectSources).toEqual(["ds_roads"]);
  });

  it("an id not offered yields 422 and the stage stays editable", async () => {
    const server = new FakeServer(twoStageScript(), ROUTE_RESULT);
    const client = api(server);
    const created = await client.createSession("route please", "control");
    await client.advance(created.id, null); // proposal
    let failure: ApiFailure | null = null;
    try {
      await client.advance(created.id, ["injected_by_devtools"]);
    } catch (error) {
      failure = error as ApiFailure;
    }
    expect(failure?.status).toBe(422);
    expect(failure?.code).toBe("invalid-override");
    const session = await client.getSession(created.id);
    expect(session.pending?.stage).toBe("Classify");
    const model = buildStepperModel(session, {}, `${failure?.code}`);
    const editable = model.rows.find((r) => r.status === "editable");
    expect(editable?.stage).toBe("Classify");
    expect(model.error).toBe("invalid-override");
  });

  it("every mutation carries a fresh request id", async () => {
    const server = new FakeServer(twoStageScript(), ROUTE_RESULT);
    const client = api(server);
    const created = await client.createSession("route please", "control");
    await acceptAll(client, created.id);
    const ids = server.advanceBodies.map((b) => String(b.request_id));
    expect(new Set(ids).size).toBe(ids.length);
    expect(ids.every((id) => id.length > 0)).toBe(true);
  });

  it("modifyPayload filters ids outside the offered options", () => {
    const proposal = {
      stage: "Classify",
      options: [{ id: "a", name: "A", description: "" }],
      selected: ["a"],
      rationale: "",
    };
    expect(modifyPayload(proposal, ["a", "smuggled"])).toEqual(["a"]);
    expect(acceptPayload()).toBeNull();
  });
});

describe("stepper model", () => {
  const base: SessionView = {
    id: "s1",
    query: "q",
    mode: "control",
    stage: "SelectSources",
    selections: { Classify: ["tt_route"] },
    pending: {
      stage: "SelectSources",
      options: [
        { id: "ds_a", name: "A", description: "" },
        { id: "ds_b", name: "B", description: "" },
      ],
      selected: ["ds_a"],
      rationale: "why not",
    },
    result: null,
    log: [],
  };

  it("locks committed stages and marks the pending one editable", () => {
    const model = buildStepperModel(base);
    const byStage = Object.fromEntries(model.rows.map((r) => [r.stage, r.status]));
    expect(byStage.Classify).toBe("committed");
    expect(byStage.SelectSources).toBe("editable");
    expect(byStage.SelectResources).toBe("upcoming");
  });

  it("pre-fills dropdowns with the agent selection", () => {
    const model = buildStepperModel(base);
    const row = model.rows.find((r) => r.stage === "SelectSources")!;
    expect(row.options.map((o) => [o.id, o.checked])).toEqual([
      ["ds_a", true],
      ["ds_b", false],
    ]);
    expect(row.rationale).toBe("why not");
  });

  it("drafts override the agent selection without touching the session", () => {
    const model = buildStepperModel(base, { SelectSources: ["ds_b"] });
    const row = model.rows.find((r) => r.stage === "SelectSources")!;
    expect(row.options.map((o) => o.checked)).toEqual([false, true]);
  });

  it("needsAdvance is false while a control proposal waits", () => {
    expect(needsAdvance(base)).toBe(false);
    expect(needsAdvance({ ...base, pending: null })).toBe(true);
    expect(needsAdvance({ ...base, stage: "Done" })).toBe(false);
  });

  it("toggleSelection adds and removes", () => {
    expect(toggleSelection(["a"], "b")).toEqual(["a", "b"]);
    expect(toggleSelection(["a", "b"], "a")).toEqual(["b"]);
  });
});
