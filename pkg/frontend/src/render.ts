// DOM rendering for the four domains. Pure construction from the server
// view; interactive elements call back with the clicked selection.

import { Selection } from "./gestures.js";
import {
  AlchemyStateJson, SailStateJson, SceneStateJson, SessionView, StateJson,
  TangramsStateJson,
} from "./types.js";

export const COLOR_CSS: Record<string, string> = {
  r: "#d9473c", o: "#e8873a", g: "#4f9d49", y: "#e8c53a",
  b: "#3f6fd9", p: "#8a4fd9", n: "#7a5230", k: "#e88ab8",
};

const SHAPE_GLYPHS = ["▲", "●", "■", "✦", "★"]; // per shape id

export type OnSelect = (sel: Selection) => void;

function el(tag: string, cls?: string, text?: string): HTMLElement {
  const node = document.createElement(tag);
  if (cls) node.className = cls;
  if (text !== undefined) node.textContent = text;
  return node;
}

function renderAlchemy(state: AlchemyStateJson, onSelect: OnSelect, selected: Selection[]): HTMLElement {
  const root = el("div", "world alchemy");
  state.beakers.forEach((units, idx) => {
    const i = idx + 1;
    const beaker = el("div", "beaker");
    if (selected.some((s) => s.kind === "slot" && s.value === i)) beaker.classList.add("selected");
    const stack = el("div", "stack");
    for (const unit of units) {
      const u = el("div", "unit");
      u.style.background = COLOR_CSS[unit] ?? "#999";
      stack.appendChild(u);
    }
    beaker.appendChild(stack);
    beaker.appendChild(el("div", "label", String(i)));
    beaker.onclick = () => onSelect({ kind: "slot", value: i });
    root.appendChild(beaker);
  });
  return root;
}

function renderScene(state: SceneStateJson, onSelect: OnSelect, selected: Selection[]): HTMLElement {
  const root = el("div", "world scene");
  state.positions.forEach((person, idx) => {
    const i = idx + 1;
    const spot = el("div", "spot");
    if (selected.some((s) => s.kind === "slot" && s.value === i)) spot.classList.add("selected");
    if (person) {
      const figure = el("div", "person");
      figure.style.background = COLOR_CSS[person.shirt] ?? "#999";
      if (person.hat) {
        const hat = el("div", "hat");
        hat.style.background = COLOR_CSS[person.hat] ?? "#999";
        figure.appendChild(hat);
      }
      spot.appendChild(figure);
    }
    spot.appendChild(el("div", "label", String(i)));
    spot.onclick = () => onSelect({ kind: "slot", value: i });
    root.appendChild(spot);
  });
  return root;
}

function renderTangrams(state: TangramsStateJson, onSelect: OnSelect, selected: Selection[]): HTMLElement {
  const root = el("div", "world tangrams");
  const row = el("div", "canvas-row");
  state.figures.forEach((shape, idx) => {
    const i = idx + 1;
    const fig = el("div", "figure", SHAPE_GLYPHS[shape] ?? String(shape));
    if (selected.some((s) => s.kind === "slot" && s.value === i)) fig.classList.add("selected");
    fig.onclick = () => onSelect({ kind: "slot", value: i });
    row.appendChild(fig);
    const gap = el("div", "gap", String(i + 1));
    gap.title = `insert position ${i + 1}`;
    gap.onclick = () => onSelect({ kind: "slot", value: i + 1 });
    row.appendChild(gap);
  });
  const lead = el("div", "gap", "1");
  lead.onclick = () => onSelect({ kind: "slot", value: 1 });
  row.prepend(lead);
  root.appendChild(row);
  const removed = new Set(state.history.map(([, shape]) => shape));
  for (const shape of state.figures) removed.delete(shape);
  if (removed.size) {
    const tray = el("div", "tray");
    tray.appendChild(el("span", "tray-label", "removed:"));
    for (const shape of Array.from(removed).sort()) {
      const chip = el("div", "figure removed", SHAPE_GLYPHS[shape] ?? String(shape));
      if (selected.some((s) => s.kind === "shape" && s.value === shape)) chip.classList.add("selected");
      chip.onclick = () => onSelect({ kind: "shape", value: shape });
      tray.appendChild(chip);
    }
    root.appendChild(tray);
  }
  return root;
}

const ARROWS: Record<string, string> = { N: "↑", E: "→", S: "↓", W: "←", U: "?" };

function renderSail(state: SailStateJson, onSelect: OnSelect): HTMLElement {
  const root = el("div", "world sail");
  const nodes = state.map.nodes;
  const xs = nodes.map((n) => n[0]);
  const ys = nodes.map((n) => n[1]);
  const minX = Math.min(...xs), maxX = Math.max(...xs);
  const minY = Math.min(...ys), maxY = Math.max(...ys);
  const grid = el("div", "grid");
  grid.style.gridTemplateColumns = `repeat(${maxX - minX + 1}, 42px)`;
  const nodeSet = new Set(nodes.map((n) => `${n[0]},${n[1]}`));
  const objAt = new Map(state.map.objects.map(([x, y, o]) => [`${x},${y}`, o]));
  const edgeSet = new Set(
    state.map.edges.map(([x1, y1, x2, y2]) => `${x1},${y1}|${x2},${y2}`),
  );
  for (let y = maxY; y >= minY; y--) {
    for (let x = minX; x <= maxX; x++) {
      const cell = el("div", "cell");
      const key = `${x},${y}`;
      if (nodeSet.has(key)) {
        cell.classList.add("node");
        if (edgeSet.has(`${x},${y}|${x + 1},${y}`) || edgeSet.has(`${x + 1},${y}|${x},${y}`)) {
          cell.classList.add("east");
        }
        if (edgeSet.has(`${x},${y}|${x},${y + 1}`) || edgeSet.has(`${x},${y + 1}|${x},${y}`)) {
          cell.classList.add("north");
        }
        const obj = objAt.get(key);
        if (obj) cell.appendChild(el("div", "object", obj[0]));
        if (state.pose.node[0] === x && state.pose.node[1] === y) {
          cell.appendChild(el("div", "agent", ARROWS[state.pose.orientation] ?? "?"));
        }
      }
      grid.appendChild(cell);
    }
  }
  root.appendChild(grid);
  root.appendChild(el("div", "hint", "arrow keys move and turn, space stops"));
  root.tabIndex = 0;
  root.onkeydown = (ev) => onSelect({ kind: "key", value: ev.key });
  return root;
}

export function renderWorld(view: SessionView, onSelect: OnSelect, selected: Selection[]): HTMLElement {
  const state = view.state as StateJson;
  switch (view.domain) {
    case "alchemy":
      return renderAlchemy(state as AlchemyStateJson, onSelect, selected);
    case "scene":
      return renderScene(state as SceneStateJson, onSelect, selected);
    case "tangrams":
      return renderTangrams(state as TangramsStateJson, onSelect, selected);
    case "sail":
      return renderSail(state as SailStateJson, onSelect);
    default:
      return el("div", "world", "unknown domain");
  }
}

export function describeAction(a: { type: string; args: Record<string, unknown> }): string {
  const args = Object.entries(a.args ?? {})
    .map(([k, v]) => `${k}=${v}`)
    .join(", ");
  return args ? `${a.type}(${args})` : a.type;
}
