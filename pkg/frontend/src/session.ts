/**
 * Chat state machine: transcript, session continuity, clarification flow,
 * and a single-in-flight submission queue.
 */

import {
  ApiError,
  FlightRagClient,
  NetworkError,
  ServiceUnavailableError,
} from "./api.js";
import {
  DEFAULT_PIPELINE,
  type AskResponse,
  type ChatError,
  type ChatMessage,
  type Pipeline,
} from "./types.js";

export interface ControllerOptions {
  /** Injectable clock so tests get stable timestamps. */
  now?: () => number;
}

export interface ChatState {
  messages: readonly ChatMessage[];
  pipeline: Pipeline;
  sessionId?: string;
  /** True while the previous assistant turn asked for clarification. */
  awaitingClarification: boolean;
  busy: boolean;
  /** Set when the service answered 503; cleared by the next success. */
  unavailable: boolean;
}

type Listener = (state: ChatState) => void;

export class ChatController {
  private readonly client: FlightRagClient;
  private readonly now: () => number;
  private readonly listeners: Listener[] = [];
  private readonly queue: string[] = [];

  private messages: ChatMessage[] = [];
  private pipeline: Pipeline = DEFAULT_PIPELINE;
  private sessionId?: string;
  private awaitingClarification = false;
  private busy = false;
  private unavailable = false;

  constructor(client: FlightRagClient, options: ControllerOptions = {}) {
    this.client = client;
    this.now = options.now ?? Date.now;
  }

  subscribe(listener: Listener): () => void {
    this.listeners.push(listener);
    return () => {
      const i = this.listeners.indexOf(listener);
      if (i >= 0) this.listeners.splice(i, 1);
    };
  }

  getState(): ChatState {
    return {
      messages: this.messages,
      pipeline: this.pipeline,
      sessionId: this.sessionId,
      awaitingClarification: this.awaitingClarification,
      busy: this.busy,
      unavailable: this.unavailable,
    };
  }

  setPipeline(pipeline: Pipeline): void {
    this.pipeline = pipeline;
    this.emit();
  }

  /** Empty or whitespace-only input cannot be submitted. */
  canSubmit(text: string): boolean {
    return text.trim().length > 0;
  }

  /**
   * Submit a question. While a request is in flight, further submissions
   * are queued and sent one at a time in order.
   */
  async submit(text: string): Promise<void> {
    if (!this.canSubmit(text)) return;
    this.queue.push(text.trim());
    if (this.busy) return;
    this.busy = true;
    this.emit();
    try {
      while (this.queue.length > 0) {
        const question = this.queue.shift()!;
        await this.sendOne(question);
      }
    } finally {
      this.busy = false;
      this.emit();
    }
  }

  /** Resubmit the question behind a failed bubble. */
  async retry(error: ChatError): Promise<void> {
    await this.submit(error.question);
  }

  private async sendOne(question: string): Promise<void> {
    this.messages.push({
      role: "user",
      text: question,
      pipeline: this.pipeline,
      timestamp: this.now(),
    });
    this.emit();
    try {
      const response = await this.client.ask({
        question,
        pipeline: this.pipeline,
        session_id: this.sessionId,
      });
      this.acceptResponse(response);
    } catch (err) {
      this.acceptFailure(question, err);
    }
    this.emit();
  }

  private acceptResponse(response: AskResponse): void {
    this.sessionId = response.session_id;
    this.awaitingClarification = response.needs_clarification;
    this.unavailable = false;
    // The assistant bubble mirrors the service answer verbatim.
    this.messages.push({
      role: "assistant",
      text: response.answer,
      pipeline: this.pipeline,
      timestamp: this.now(),
      response,
    });
  }

  private acceptFailure(question: string, err: unknown): void {
    let error: ChatError;
    if (err instanceof ServiceUnavailableError) {
      this.unavailable = true;
      error = { kind: "unavailable", detail: err.message, question };
    } else if (err instanceof NetworkError) {
      error = { kind: "network", detail: err.message, question };
    } else if (err instanceof ApiError) {
      error = { kind: "api", detail: err.message, question };
    } else {
      error = { kind: "api", detail: String(err), question };
    }
    this.messages.push({
      role: "assistant",
      text: error.detail,
      pipeline: this.pipeline,
      timestamp: this.now(),
      error,
    });
  }

  private emit(): void {
    const state = this.getState();
    for (const listener of this.listeners) listener(state);
  }
}
