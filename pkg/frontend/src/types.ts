/** Wire and view-model types shared across the chat client. */

export type Pipeline = "traditional" | "sql" | "graph";

export const PIPELINES: readonly Pipeline[] = ["traditional", "sql", "graph"];

/** Default pipeline: the graph pipeline gives the most reliable answers. */
export const DEFAULT_PIPELINE: Pipeline = "graph";

/** Request body for POST /v1/ask. */
export interface AskRequest {
  question: string;
  pipeline: Pipeline;
  session_id?: string;
}

/** Response body of POST /v1/ask, mirrored verbatim into the transcript. */
export interface AskResponse {
  session_id: string;
  answer: string;
  pipeline: string;
  category: string;
  needs_clarification: boolean;
  evidence_doc_ids: string[];
  query_text: string;
  flagged_entities: string[];
}

export type Role = "user" | "assistant";

/** One transcript entry. Assistant entries carry the raw service response. */
export interface ChatMessage {
  role: Role;
  text: string;
  pipeline: Pipeline;
  timestamp: number;
  response?: AskResponse;
  /** Set on synthetic error bubbles; the original question can be retried. */
  error?: ChatError;
}

export type ChatErrorKind = "network" | "unavailable" | "api";

export interface ChatError {
  kind: ChatErrorKind;
  detail: string;
  /** The question that failed, so a retry can resubmit it. */
  question: string;
}
