// Expandable reasoning-trace panel: one collapsible timeline per agent run
// plus the step-refinement tree. Collapsed by default; traces are for
// drill-down, not the primary reading path.

import { AgentTranscript, ApiClient, ApiError, ChainTrace, RefinementNode } from "./api.js";

function el<K extends keyof HTMLElementTagNameMap>(
  doc: Document,
  tag: K,
  className: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = doc.createElement(tag);
  node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function timelineBlock(doc: Document, kind: string, text: string): HTMLElement {
  const block = el(doc, "div", `trace-block trace-${kind.toLowerCase()}`);
  block.appendChild(el(doc, "span", "trace-kind", kind));
  block.appendChild(el(doc, "pre", "trace-text", text));
  return block;
}

/** Render one scratchpad as a THOUGHT/ACTION/OBSERVATION timeline. */
export function renderScratchpad(doc: Document, transcript: AgentTranscript): HTMLElement {
  const timeline = el(doc, "div", "trace-timeline");
  for (const entry of transcript.scratchpad) {
    timeline.appendChild(timelineBlock(doc, "THOUGHT", entry.thought));
    if (entry.action) {
      timeline.appendChild(
        timelineBlock(doc, "ACTION", `${entry.action.tool_name}(${entry.action.argument})`),
      );
    }
    if (entry.observation !== null) {
      timeline.appendChild(timelineBlock(doc, "OBSERVATION", entry.observation));
    }
  }
  return timeline;
}

/** Render the refinement tree as nested lists of step instructions. */
export function renderTree(doc: Document, roots: RefinementNode[]): HTMLElement {
  const list = el(doc, "ul", "trace-tree");
  for (const node of roots) {
    const item = el(doc, "li", `trace-node trace-node-${node.status}`);
    item.appendChild(el(doc, "span", "trace-instruction", node.instruction));
    if (node.children.length > 0) {
      item.appendChild(renderTree(doc, node.children));
    }
    list.appendChild(item);
  }
  return list;
}

export function renderTracePanel(doc: Document, trace: ChainTrace): HTMLElement {
  const panel = el(doc, "div", "trace-panel");
  if (trace.initial_transcript) {
    const details = el(doc, "details", "trace-section");
    details.appendChild(el(doc, "summary", "trace-summary", "Planning run"));
    details.appendChild(renderScratchpad(doc, trace.initial_transcript));
    panel.appendChild(details);
  }
  if (trace.refinement_tree && trace.refinement_tree.length > 0) {
    const details = el(doc, "details", "trace-section");
    details.appendChild(el(doc, "summary", "trace-summary", "Step refinement"));
    details.appendChild(renderTree(doc, trace.refinement_tree));
    panel.appendChild(details);
  }
  if (panel.childNodes.length === 0) {
    panel.appendChild(el(doc, "p", "trace-empty", "trace unavailable"));
  }
  return panel;
}

/** Fetch and render the trace for one turn; 404 or a missing trace file
 * degrades to a "trace unavailable" panel instead of an error. */
export async function loadTracePanel(
  doc: Document,
  api: ApiClient,
  sessionId: string,
  turnIndex: number,
): Promise<HTMLElement> {
  try {
    const trace = await api.trace(sessionId, turnIndex);
    return renderTracePanel(doc, trace);
  } catch (err) {
    if (err instanceof ApiError && err.status === 404) {
      const panel = el(doc, "div", "trace-panel");
      panel.appendChild(el(doc, "p", "trace-empty", "trace unavailable"));
      return panel;
    }
    throw err;
  }
}
