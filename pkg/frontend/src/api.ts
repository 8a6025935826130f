// Typed client for the repoguide HTTP service. The UI talks to nothing else.

export interface Citation {
  source_url: string;
  repo_path: string;
}

export interface AskResponse {
  final_answer: string;
  citations: Citation[];
  turn_index: number;
}

export interface TurnSummary {
  turn_index: number;
  question: string;
  final_answer: string;
  error_stage?: string | null;
}

export interface SessionHistory {
  session_id: string;
  turns: TurnSummary[];
}

export interface ScratchpadEntry {
  step_index: number;
  thought: string;
  action: { tool_name: string; argument: string; call_index: number } | null;
  observation: string | null;
}

export interface AgentTranscript {
  question: string;
  scratchpad: ScratchpadEntry[];
  plan: { index: number; instruction: string }[];
  termination: string;
}

export interface RefinementNode {
  instruction: string;
  depth: number;
  status: string;
  partial_solution: string;
  children: RefinementNode[];
}

export interface ChainTrace {
  question: string;
  initial_transcript?: AgentTranscript;
  refinement_tree?: RefinementNode[];
  final_markdown?: string;
}

export class ApiError extends Error {
  constructor(
    public status: number,
    public stage: string | null,
    message: string,
  ) {
    super(message);
  }
}

async function asApiError(resp: Response): Promise<ApiError> {
  let stage: string | null = null;
  let detail = resp.statusText;
  try {
    const body = await resp.json();
    stage = body.stage ?? null;
    detail = body.detail ?? detail;
  } catch {
    // non-JSON error body; keep the status text
  }
  return new ApiError(resp.status, stage, detail);
}

export class ApiClient {
  constructor(private baseUrl: string = "") {}

  private url(path: string): string {
    return this.baseUrl.replace(/\/$/, "") + path;
  }

  async createSession(): Promise<string> {
    const resp = await fetch(this.url("/sessions"), { method: "POST" });
    if (!resp.ok) throw await asApiError(resp);
    return (await resp.json()).session_id;
  }

  async ask(sessionId: string, question: string): Promise<AskResponse> {
    const resp = await fetch(this.url(`/sessions/${sessionId}/ask`), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ question }),
    });
    if (!resp.ok) throw await asApiError(resp);
    return resp.json();
  }

  async history(sessionId: string): Promise<SessionHistory> {
    const resp = await fetch(this.url(`/sessions/${sessionId}`));
    if (!resp.ok) throw await asApiError(resp);
    return resp.json();
  }

  async trace(sessionId: string, turnIndex: number): Promise<ChainTrace> {
    const resp = await fetch(this.url(`/sessions/${sessionId}/turns/${turnIndex}/trace`));
    if (!resp.ok) throw await asApiError(resp);
    return resp.json();
  }
}
