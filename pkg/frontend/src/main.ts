// Page wiring: one active session per tab, all mutation through acknowledged
// requests against the evaluation service.

import { EvalApi } from "./api.js";
import { prefixAlive, resolveGesture, Selection } from "./gestures.js";
import { SessionViewModel } from "./model.js";
import { describeAction, renderWorld } from "./render.js";
import { ActionJson } from "./types.js";

const api = new EvalApi("");
const vm = new SessionViewModel(api);

let selections: Selection[] = [];
let pendingChoices: ActionJson[] = [];

function $(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node;
}

function toast(message: string): void {
  const box = $("toast");
  box.textContent = message;
  box.classList.add("visible");
  setTimeout(() => box.classList.remove("visible"), 2500);
}

async function submit(action: ActionJson): Promise<void> {
  selections = [];
  pendingChoices = [];
  const before = JSON.stringify(vm.view?.state);
  await vm.perform(action);
  if (vm.lastError) {
    toast(vm.lastError);
    if (JSON.stringify(vm.view?.state) !== before) {
      throw new Error("state changed despite a rejected action");
    }
  }
  render();
}

function onSelect(sel: Selection): void {
  if (!vm.view || vm.phase !== "active") return;
  const trial = [...selections, sel];
  const matches = resolveGesture(vm.view.domain, trial, vm.validActions);
  if (matches.length === 1) {
    void submit(matches[0]);
    return;
  }
  if (matches.length > 1) {
    selections = trial;
    pendingChoices = matches;
  } else if (prefixAlive(vm.view.domain, trial, vm.validActions)) {
    selections = trial;
    pendingChoices = [];
  } else {
    selections = sel.kind === "slot" || sel.kind === "color" || sel.kind === "shape" ? [sel] : [];
    pendingChoices = [];
  }
  render();
}

function render(): void {
  const view = vm.view;
  $("status").textContent =
    vm.phase === "finished"
      ? vm.result?.success
        ? "finished"
        : "finished"
      : vm.phase;
  if (!view) return;
  $("instruction").textContent = view.instruction ?? "(all instructions done)";
  $("progress").textContent = `sentence ${Math.min(view.step + 1, view.sentence_count)} of ${view.sentence_count}`;
  const world = $("world");
  world.replaceChildren(renderWorld(view, onSelect, selections));

  // action affordances mirror the server's valid actions exactly
  const buttons = $("actions");
  buttons.replaceChildren();
  const source = pendingChoices.length ? pendingChoices : view.valid_actions;
  for (const action of source) {
    if (action.type === "shift") continue;
    const b = document.createElement("button");
    b.textContent = describeAction(action);
    b.onclick = () => void submit(action);
    buttons.appendChild(b);
  }
  const controls = $("controls");
  (controls.querySelector("#next") as HTMLButtonElement).disabled =
    vm.phase !== "active" || view.done_all_sentences;
  (controls.querySelector("#finish") as HTMLButtonElement).disabled = vm.phase !== "active";
  if (vm.phase === "finished" && vm.result) {
    $("result").textContent = "session recorded, thank you";
  } else {
    $("result").textContent = "";
  }
}

function boot(): void {
  ($("start") as HTMLButtonElement).onclick = async () => {
    const system = ($("system") as HTMLInputElement).value || "human";
    const domain = ($("domain") as HTMLSelectElement).value || undefined;
    try {
      await vm.start(system, domain);
      selections = [];
      render();
    } catch (e) {
      toast(String(e));
    }
  };
  ($("next") as HTMLButtonElement).onclick = async () => {
    await vm.nextInstruction();
    render();
  };
  ($("finish") as HTMLButtonElement).onclick = async () => {
    await vm.finish();
    render();
  };
}

document.addEventListener("DOMContentLoaded", boot);
