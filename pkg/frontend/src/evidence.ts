/**
 * Evidence panel view-model: what backs an assistant answer.
 *
 * traditional answers point at retrieved article ids; sql and graph answers
 * carry the executed query text; hallucination flags become warnings.
 */

import type { ChatMessage } from "./types.js";

export interface EvidencePanel {
  kind: "query" | "articles" | "empty";
  /** Executed query text, verbatim, for sql/graph answers. */
  queryText?: string;
  /** Retrieved document ids (flight UIDs) for traditional answers. */
  docIds: string[];
  /** Entities the hallucination guard could not confirm. */
  warnings: string[];
}

export function buildEvidencePanel(message: ChatMessage): EvidencePanel {
  const response = message.response;
  if (!response) {
    return { kind: "empty", docIds: [], warnings: [] };
  }
  const warnings = response.flagged_entities;
  if (response.query_text) {
    return {
      kind: "query",
      queryText: response.query_text,
      docIds: response.evidence_doc_ids,
      warnings,
    };
  }
  if (response.evidence_doc_ids.length > 0) {
    return { kind: "articles", docIds: response.evidence_doc_ids, warnings };
  }
  return { kind: "empty", docIds: [], warnings };
}
