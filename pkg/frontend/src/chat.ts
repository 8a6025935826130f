// Chat view: session state, message rendering, and the send flow.
// The UI never synthesizes answer text; every rendered answer is the
// server payload verbatim.

import { ApiClient, ApiError, Citation } from "./api.js";
import { renderMarkdown } from "./markdown.js";
import { loadTracePanel } from "./trace.js";

export interface UiMessage {
  author: "user" | "assistant" | "error";
  markdown: string;
  citations: Citation[];
  turn_index: number | null;
}

export interface UiSession {
  sessionId: string;
  messages: UiMessage[];
  pending: boolean;
}

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

export class ChatView {
  session: UiSession | null = null;
  private messageList: HTMLElement;
  private input: HTMLTextAreaElement;
  private sendButton: HTMLButtonElement;
  private status: HTMLElement;

  constructor(
    private doc: Document,
    private root: HTMLElement,
    private api: ApiClient,
  ) {
    this.messageList = el(doc, "div", "messages");
    this.input = el(doc, "textarea", "question-input");
    this.input.rows = 3;
    this.input.placeholder = "Ask about this codebase (shift-enter for a new line)";
    this.sendButton = el(doc, "button", "send-button", "Send");
    this.status = el(doc, "div", "status");
    const form = el(doc, "div", "composer");
    form.appendChild(this.input);
    form.appendChild(this.sendButton);
    root.appendChild(this.messageList);
    root.appendChild(this.status);
    root.appendChild(form);

    this.sendButton.addEventListener("click", () => void this.send());
    this.input.addEventListener("keydown", (event: KeyboardEvent) => {
      // Enter sends; shift-enter inserts a newline into the same question
      if (event.key === "Enter" && !event.shiftKey) {
        event.preventDefault();
        void this.send();
      }
    });
  }

  async start(sessionId?: string): Promise<void> {
    if (sessionId) {
      await this.restore(sessionId);
    } else {
      const sid = await this.api.createSession();
      this.session = { sessionId: sid, messages: [], pending: false };
      this.render();
    }
  }

  /** Rebuild the message list from the server's turn history. */
  async restore(sessionId: string): Promise<void> {
    const history = await this.api.history(sessionId);
    const messages: UiMessage[] = [];
    for (const turn of history.turns) {
      messages.push({
        author: "user",
        markdown: turn.question,
        citations: [],
        turn_index: turn.turn_index,
      });
      if (turn.error_stage) {
        messages.push({
          author: "error",
          markdown: `The ${turn.error_stage} stage failed for this turn.`,
          citations: [],
          turn_index: turn.turn_index,
        });
      } else {
        messages.push({
          author: "assistant",
          markdown: turn.final_answer,
          citations: [],
          turn_index: turn.turn_index,
        });
      }
    }
    this.session = { sessionId, messages, pending: false };
    this.render();
  }

  async send(text?: string): Promise<void> {
    if (!this.session || this.session.pending) return;
    const question = text ?? this.input.value;
    if (question.trim() === "") return;

    this.session.pending = true;
    this.session.messages.push({
      author: "user",
      markdown: question,
      citations: [],
      turn_index: null,
    });
    this.status.textContent = "Thinking: planning and refining steps…";
    this.render();

    try {
      const answer = await this.api.ask(this.session.sessionId, question);
      this.session.messages.push({
        author: "assistant",
        markdown: answer.final_answer,
        citations: answer.citations,
        turn_index: answer.turn_index,
      });
      this.input.value = "";
    } catch (err) {
      // keep the input so retry can re-post the identical question
      const detail =
        err instanceof ApiError && err.stage
          ? `The ${err.stage} stage failed: ${err.message}`
          : `Request failed: ${err instanceof Error ? err.message : String(err)}`;
      this.session.messages.push({
        author: "error",
        markdown: detail,
        citations: [],
        turn_index: null,
      });
      this.input.value = question;
    } finally {
      this.session.pending = false;
      this.status.textContent = "";
      this.render();
    }
  }

  render(): void {
    if (!this.session) return;
    this.messageList.innerHTML = "";
    for (const message of this.session.messages) {
      this.messageList.appendChild(this.renderMessage(message));
    }
    this.sendButton.disabled = this.session.pending;
    this.input.disabled = this.session.pending;
  }

  private renderMessage(message: UiMessage): HTMLElement {
    const bubble = el(this.doc, "div", `message message-${message.author}`);
    if (message.author === "user") {
      const body = el(this.doc, "pre", "message-body", message.markdown);
      bubble.appendChild(body);
      return bubble;
    }
    if (message.author === "error") {
      bubble.appendChild(el(this.doc, "p", "message-body", message.markdown));
      const retry = el(this.doc, "button", "retry-button", "Retry");
      retry.addEventListener("click", () => {
        if (!this.session) return;
        // drop the error bubble and its user echo, then re-send verbatim
        const idx = this.session.messages.indexOf(message);
        this.session.messages.splice(Math.max(idx - 1, 0), idx >= 1 ? 2 : 1);
        void this.send(this.input.value);
      });
      bubble.appendChild(retry);
      return bubble;
    }
    const body = el(this.doc, "div", "message-body");
    body.innerHTML = renderMarkdown(message.markdown);
    bubble.appendChild(body);
    if (message.citations.length > 0) {
      const list = el(this.doc, "ul", "citations");
      for (const citation of message.citations) {
        const item = el(this.doc, "li", "citation");
        const link = el(this.doc, "a", "citation-link", citation.repo_path);
        link.setAttribute("href", citation.source_url);
        item.appendChild(link);
        list.appendChild(item);
      }
      bubble.appendChild(list);
    }
    if (message.turn_index !== null) {
      bubble.appendChild(this.traceToggle(message.turn_index));
    }
    return bubble;
  }

  private traceToggle(turnIndex: number): HTMLElement {
    const holder = el(this.doc, "div", "trace-holder");
    const toggle = el(this.doc, "button", "trace-toggle", "Show trace");
    toggle.addEventListener("click", async () => {
      if (!this.session) return;
      if (holder.querySelector(".trace-panel")) {
        holder.querySelector(".trace-panel")!.remove();
        toggle.textContent = "Show trace";
        return;
      }
      const panel = await loadTracePanel(this.doc, this.api, this.session.sessionId, turnIndex);
      holder.appendChild(panel);
      toggle.textContent = "Hide trace";
    });
    holder.appendChild(toggle);
    return holder;
  }
}
