/** In-memory stand-in for the flightrag service, shaped like fetch. */

import type { FetchLike } from "../src/api.js";
import type { AskRequest, AskResponse } from "../src/types.js";

const CLARIFICATION =
  "I cannot determine the specific location of the KLM flight you are " +
  "asking about. Could you provide the flight number?";

interface MockState {
  sessions: Map<string, { pending?: string }>;
  nextSession: number;
  mode: "ok" | "down" | "unavailable";
  requests: AskRequest[];
}

export interface MockService {
  fetch: FetchLike;
  state: MockState;
}

function respond(body: AskResponse) {
  return { ok: true, status: 200, json: async () => body };
}

/**
 * Two-turn behaviour: a question mentioning an airline but no flight number
 * asks for clarification; the next question in the same session (or any
 * question carrying a flight number) is answered. SQL/graph answers carry
 * query text; a question mentioning "ghost" produces a flagged entity.
 */
export function createMockService(): MockService {
  const state: MockState = {
    sessions: new Map(),
    nextSession: 0,
    mode: "ok",
    requests: [],
  };

  const fetch: FetchLike = async (input, init) => {
    if (state.mode === "down") {
      throw new Error("connection refused");
    }
    if (state.mode === "unavailable") {
      return { ok: false, status: 503, json: async () => ({ detail: "llm down" }) };
    }
    if (!input.endsWith("/v1/ask") || !init?.body) {
      return { ok: false, status: 404, json: async () => ({ detail: "not found" }) };
    }
    const request = JSON.parse(init.body) as AskRequest;
    state.requests.push(request);

    let sessionId = request.session_id;
    if (!sessionId || !state.sessions.has(sessionId)) {
      sessionId = `sess-${state.nextSession++}`;
      state.sessions.set(sessionId, {});
    }
    const session = state.sessions.get(sessionId)!;
    const question = session.pending
      ? `Original question: ${session.pending} Additional information: ${request.question}`
      : request.question;
    session.pending = undefined;

    const hasFlightNr = /\b[A-Z]{2}\d{3,4}\b/.test(question);
    const base: AskResponse = {
      session_id: sessionId,
      answer: "",
      pipeline: request.pipeline,
      category: "STRAIGHTFORWARD",
      needs_clarification: false,
      evidence_doc_ids: [],
      query_text: "",
      flagged_entities: [],
    };

    if (!hasFlightNr && /klm|airline/i.test(question)) {
      session.pending = request.question;
      return respond({
        ...base,
        answer: CLARIFICATION,
        category: "BQA",
        needs_clarification: true,
      });
    }

    const nr = question.match(/\b[A-Z]{2}\d{3,4}\b/)?.[0] ?? "KL1234";
    const flagged = /ghost/i.test(question) ? [`${nr}X`] : [];
    if (request.pipeline === "sql") {
      return respond({
        ...base,
        answer: `ramp: C05.`,
        evidence_doc_ids: [`UID-${nr.slice(2)}`],
        query_text: `SELECT ramp FROM flights WHERE flight_nr = '${nr}'`,
        flagged_entities: flagged,
      });
    }
    if (request.pipeline === "graph") {
      return respond({
        ...base,
        answer: `ramp: C05.`,
        evidence_doc_ids: [`UID-${nr.slice(2)}`],
        query_text: `MATCH (f:Flight {flight_nr: '${nr}'})-[:AT_RAMP]->(r:Ramp) RETURN r.code`,
        flagged_entities: flagged,
      });
    }
    return respond({
      ...base,
      answer: `Flight ${nr} is parked at ramp C05.`,
      evidence_doc_ids: [`UID-${nr.slice(2)}`],
      flagged_entities: flagged,
    });
  };

  return { fetch, state };
}
