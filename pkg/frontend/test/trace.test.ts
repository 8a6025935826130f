import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";
import { ApiClient } from "../src/api.js";
import { loadTracePanel, renderScratchpad, renderTracePanel, renderTree } from "../src/trace.js";
import { fixtureTrace, installMockServer } from "./mock_server.js";

beforeEach(() => {
  document.body.innerHTML = "";
});

afterEach(() => {
  vi.unstubAllGlobals();
});

describe("scratchpad timeline", () => {
  it("emits exactly 3 blocks for an entry with one action", () => {
    const trace = fixtureTrace();
    const transcript = {
      ...trace.initial_transcript!,
      scratchpad: trace.initial_transcript!.scratchpad.slice(0, 1),
    };
    const timeline = renderScratchpad(document, transcript);
    const blocks = timeline.querySelectorAll(".trace-block");
    expect(blocks).toHaveLength(3);
    expect(blocks[0].className).toContain("trace-thought");
    expect(blocks[1].className).toContain("trace-action");
    expect(blocks[2].className).toContain("trace-observation");
  });

  it("block counts match the trace json structure", () => {
    const transcript = fixtureTrace().initial_transcript!;
    const timeline = renderScratchpad(document, transcript);
    let expected = 0;
    for (const entry of transcript.scratchpad) {
      expected += 1; // thought is always present
      if (entry.action) expected += 1;
      if (entry.observation !== null) expected += 1;
    }
    expect(timeline.querySelectorAll(".trace-block")).toHaveLength(expected);
  });
});

describe("refinement tree", () => {
  it("renders a 2x2 tree as 2 roots with 2 children each", () => {
    const tree = renderTree(document, fixtureTrace().refinement_tree!);
    const roots = tree.querySelectorAll(":scope > li");
    expect(roots).toHaveLength(2);
    for (const root of roots) {
      expect(root.querySelectorAll(":scope > ul > li")).toHaveLength(2);
    }
  });
});

describe("trace panel", () => {
  it("wraps timeline and tree in collapsed sections", () => {
    const panel = renderTracePanel(document, fixtureTrace());
    const sections = panel.querySelectorAll("details");
    expect(sections).toHaveLength(2);
    for (const section of sections) {
      expect(section.open).toBe(false);
    }
  });

  it("shows an empty state for a trace with no content", () => {
    const panel = renderTracePanel(document, { question: "q" });
    expect(panel.textContent).toContain("trace unavailable");
  });

  it("degrades to 'trace unavailable' on a 404", async () => {
    installMockServer();
    const api = new ApiClient("");
    const sid = await api.createSession();
    const panel = await loadTracePanel(document, api, sid, 9);
    expect(panel.textContent).toContain("trace unavailable");
  });

  it("renders a fetched trace for an existing turn", async () => {
    installMockServer();
    const api = new ApiClient("");
    const sid = await api.createSession();
    await api.ask(sid, "question");
    const panel = await loadTracePanel(document, api, sid, 0);
    expect(panel.querySelectorAll(".trace-block").length).toBeGreaterThan(0);
    expect(panel.querySelectorAll(".trace-tree").length).toBeGreaterThan(0);
  });
});
