/** Browser entry point: wires the chat controller to the page. */

import { FlightRagClient } from "./api.js";
import { renderBanner, renderSessionBadge, renderTranscript } from "./render.js";
import { ChatController, type ChatState } from "./session.js";
import { PIPELINES, type Pipeline } from "./types.js";

function byId<T extends HTMLElement>(id: string): T {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
}

export function bootstrap(baseUrl: string = ""): ChatController {
  const client = new FlightRagClient(baseUrl || window.location.origin);
  const controller = new ChatController(client);

  const transcript = byId<HTMLDivElement>("transcript");
  const banner = byId<HTMLDivElement>("banner");
  const badge = byId<HTMLSpanElement>("session-badge");
  const input = byId<HTMLInputElement>("question");
  const send = byId<HTMLButtonElement>("send");
  const selector = byId<HTMLSelectElement>("pipeline");

  for (const pipeline of PIPELINES) {
    const option = document.createElement("option");
    option.value = pipeline;
    option.textContent = pipeline;
    selector.appendChild(option);
  }
  selector.value = controller.getState().pipeline;

  const redraw = (state: ChatState): void => {
    transcript.innerHTML = renderTranscript(state);
    banner.innerHTML = renderBanner(state);
    badge.innerHTML = renderSessionBadge(state);
    send.disabled = !controller.canSubmit(input.value);
    transcript.scrollTop = transcript.scrollHeight;
    for (const button of transcript.querySelectorAll<HTMLButtonElement>("button.retry")) {
      button.addEventListener("click", () => {
        void controller.submit(button.dataset.question ?? "");
      });
    }
  };
  controller.subscribe(redraw);

  input.addEventListener("input", () => {
    send.disabled = !controller.canSubmit(input.value);
  });
  const submit = (): void => {
    const text = input.value;
    if (!controller.canSubmit(text)) return;
    input.value = "";
    send.disabled = true;
    void controller.submit(text);
  };
  send.addEventListener("click", submit);
  input.addEventListener("keydown", (event) => {
    if (event.key === "Enter") submit();
  });
  selector.addEventListener("change", () => {
    controller.setPipeline(selector.value as Pipeline);
  });

  send.disabled = true;
  redraw(controller.getState());
  return controller;
}

declare global {
  interface Window {
    flightragChat?: ChatController;
  }
}

if (typeof document !== "undefined" && document.getElementById("transcript")) {
  window.flightragChat = bootstrap();
}
