// Direct-manipulation gestures: the page records clicks on world elements
// (beakers, people, figures, grid cells) and resolves them against the
// server-provided valid-action list. A gesture maps to an action only if the
// server currently allows it, so every enabled control mirrors valid_actions.

import { ActionJson } from "./types.js";

export interface Selection {
  kind: "slot" | "color" | "amount" | "shape" | "key";
  value: number | string;
}

function arg(a: ActionJson, name: string): unknown {
  return (a.args ?? {})[name];
}

/** All valid actions consistent with the current selection sequence. An
 * empty result means the gesture is impossible; a singleton is committed
 * immediately; several results prompt a disambiguation choice. */
export function resolveGesture(
  domain: string,
  selections: Selection[],
  valid: ActionJson[],
): ActionJson[] {
  if (selections.length === 0) return [];
  const s = selections;
  switch (domain) {
    case "alchemy": {
      if (s[0].kind === "amount" && s.length === 2 && s[1].kind === "slot") {
        return valid.filter(
          (a) => a.type === "drain" && arg(a, "a") === s[0].value && arg(a, "i") === s[1].value,
        );
      }
      if (s[0].kind !== "slot") return [];
      if (s.length === 1) {
        return valid.filter(
          (a) =>
            (a.type === "mix" && arg(a, "i") === s[0].value) ||
            (a.type === "pour" && arg(a, "i") === s[0].value) ||
            (a.type === "drain" && arg(a, "i") === s[0].value),
        );
      }
      if (s.length === 2 && s[1].kind === "slot") {
        if (s[0].value === s[1].value) {
          return valid.filter((a) => a.type === "mix" && arg(a, "i") === s[0].value);
        }
        return valid.filter(
          (a) => a.type === "pour" && arg(a, "i") === s[0].value && arg(a, "j") === s[1].value,
        );
      }
      if (s.length === 2 && s[1].kind === "amount") {
        return valid.filter(
          (a) => a.type === "drain" && arg(a, "i") === s[0].value && arg(a, "a") === s[1].value,
        );
      }
      return [];
    }
    case "scene": {
      if (s[0].kind === "color" && s.length === 2 && s[1].kind === "slot") {
        return valid.filter(
          (a) => a.type === "enter" && arg(a, "c") === s[0].value && arg(a, "i") === s[1].value,
        );
      }
      if (s[0].kind !== "slot") return [];
      if (s.length === 1) {
        return valid.filter(
          (a) =>
            (a.type === "exit" && arg(a, "i") === s[0].value) ||
            (["move", "switch", "takehat"].includes(a.type) && arg(a, "i") === s[0].value),
        );
      }
      if (s.length === 2 && s[1].kind === "slot") {
        if (s[0].value === s[1].value) {
          return valid.filter((a) => a.type === "exit" && arg(a, "i") === s[0].value);
        }
        return valid.filter(
          (a) =>
            ["move", "switch", "takehat"].includes(a.type) &&
            arg(a, "i") === s[0].value &&
            arg(a, "j") === s[1].value,
        );
      }
      return [];
    }
    case "tangrams": {
      if (s[0].kind === "shape" && s.length === 2 && s[1].kind === "slot") {
        return valid.filter(
          (a) => a.type === "insert" && arg(a, "s") === s[0].value && arg(a, "i") === s[1].value,
        );
      }
      if (s[0].kind !== "slot") return [];
      if (s.length === 1) {
        return valid.filter(
          (a) =>
            (a.type === "remove" && arg(a, "i") === s[0].value) ||
            (a.type === "swap" && arg(a, "i") === s[0].value),
        );
      }
      if (s.length === 2 && s[1].kind === "slot") {
        if (s[0].value === s[1].value) {
          return valid.filter((a) => a.type === "remove" && arg(a, "i") === s[0].value);
        }
        return valid.filter(
          (a) => a.type === "swap" && arg(a, "i") === s[0].value && arg(a, "j") === s[1].value,
        );
      }
      return [];
    }
    case "sail": {
      if (s[0].kind !== "key") return [];
      const key = s[0].value;
      const type =
        key === "ArrowUp" ? "move" : key === "ArrowLeft" ? "left" : key === "ArrowRight" ? "right" : key === " " ? "stop" : null;
      if (type === null) return [];
      if (type === "move") {
        return valid.filter((a) => a.type === "move" && arg(a, "n") === 1);
      }
      return valid.filter((a) => a.type === type);
    }
    default:
      return [];
  }
}

/** Whether a longer selection starting from this prefix could still resolve
 * (keeps the first click highlighted instead of clearing it). */
export function prefixAlive(domain: string, selections: Selection[], valid: ActionJson[]): boolean {
  if (resolveGesture(domain, selections, valid).length > 0) return true;
  if (selections.length >= 2) return false;
  const probes: Selection[][] = [];
  const slots = Array.from({ length: 10 }, (_, i) => ({ kind: "slot", value: i + 1 }) as Selection);
  const amounts = Array.from({ length: 4 }, (_, i) => ({ kind: "amount", value: i + 1 }) as Selection);
  for (const nxt of [...slots, ...amounts]) probes.push([...selections, nxt]);
  return probes.some((p) => resolveGesture(domain, p, valid).length > 0);
}
