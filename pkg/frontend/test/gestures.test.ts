import { describe, expect, it } from "vitest";
import { prefixAlive, resolveGesture } from "../src/gestures";
import { ActionJson } from "../src/types";

const VALID_ALCHEMY: ActionJson[] = [
  { type: "mix", args: { i: 1 } },
  { type: "pour", args: { i: 1, j: 2 } },
  { type: "pour", args: { i: 3, j: 2 } },
  { type: "drain", args: { a: 1, i: 1 } },
  { type: "drain", args: { a: 2, i: 1 } },
  { type: "shift", args: {} },
];

describe("alchemy gestures", () => {
  it("click source then target issues the pour", () => {
    const matches = resolveGesture(
      "alchemy",
      [{ kind: "slot", value: 1 }, { kind: "slot", value: 2 }],
      VALID_ALCHEMY,
    );
    expect(matches).toEqual([{ type: "pour", args: { i: 1, j: 2 } }]);
  });

  it("clicking the same beaker twice means mix", () => {
    const matches = resolveGesture(
      "alchemy",
      [{ kind: "slot", value: 1 }, { kind: "slot", value: 1 }],
      VALID_ALCHEMY,
    );
    expect(matches).toEqual([{ type: "mix", args: { i: 1 } }]);
  });

  it("gestures toward invalid targets resolve to nothing", () => {
    // beaker 2 full: no pour into it listed among valid actions from 4
    const matches = resolveGesture(
      "alchemy",
      [{ kind: "slot", value: 4 }, { kind: "slot", value: 2 }],
      VALID_ALCHEMY,
    );
    expect(matches).toEqual([]);
  });

  it("amount then beaker resolves a drain", () => {
    const matches = resolveGesture(
      "alchemy",
      [{ kind: "amount", value: 2 }, { kind: "slot", value: 1 }],
      VALID_ALCHEMY,
    );
    expect(matches).toEqual([{ type: "drain", args: { a: 2, i: 1 } }]);
  });

  it("a single click keeps the prefix alive for a second click", () => {
    expect(prefixAlive("alchemy", [{ kind: "slot", value: 1 }], VALID_ALCHEMY)).toBe(true);
    expect(prefixAlive("alchemy", [{ kind: "slot", value: 6 }], VALID_ALCHEMY)).toBe(false);
  });
});

describe("scene gestures", () => {
  const valid: ActionJson[] = [
    { type: "move", args: { i: 2, j: 5 } },
    { type: "switch", args: { i: 2, j: 3 } },
    { type: "takehat", args: { i: 2, j: 3 } },
    { type: "exit", args: { i: 2 } },
  ];

  it("person to empty slot is an unambiguous move", () => {
    const matches = resolveGesture(
      "scene",
      [{ kind: "slot", value: 2 }, { kind: "slot", value: 5 }],
      valid,
    );
    expect(matches).toEqual([{ type: "move", args: { i: 2, j: 5 } }]);
  });

  it("person to person offers switch and takehat for disambiguation", () => {
    const matches = resolveGesture(
      "scene",
      [{ kind: "slot", value: 2 }, { kind: "slot", value: 3 }],
      valid,
    );
    expect(matches.map((a) => a.type).sort()).toEqual(["switch", "takehat"]);
  });
});

describe("sail gestures", () => {
  const valid: ActionJson[] = [
    { type: "move", args: { n: 1 } },
    { type: "left", args: {} },
    { type: "right", args: {} },
    { type: "stop", args: {} },
  ];

  it("arrow keys map to primitive actions", () => {
    expect(resolveGesture("sail", [{ kind: "key", value: "ArrowUp" }], valid))
      .toEqual([{ type: "move", args: { n: 1 } }]);
    expect(resolveGesture("sail", [{ kind: "key", value: "ArrowLeft" }], valid))
      .toEqual([{ type: "left", args: {} }]);
    expect(resolveGesture("sail", [{ kind: "key", value: " " }], valid))
      .toEqual([{ type: "stop", args: {} }]);
  });

  it("blocked forward resolves to nothing when move is not offered", () => {
    const noMove = valid.filter((a) => a.type !== "move");
    expect(resolveGesture("sail", [{ kind: "key", value: "ArrowUp" }], noMove)).toEqual([]);
  });
});

describe("tangrams gestures", () => {
  const valid: ActionJson[] = [
    { type: "remove", args: { i: 1 } },
    { type: "swap", args: { i: 1, j: 2 } },
    { type: "insert", args: { i: 2, s: 3 } },
  ];

  it("removed-shape chip then gap inserts", () => {
    const matches = resolveGesture(
      "tangrams",
      [{ kind: "shape", value: 3 }, { kind: "slot", value: 2 }],
      valid,
    );
    expect(matches).toEqual([{ type: "insert", args: { i: 2, s: 3 } }]);
  });

  it("two figures swap", () => {
    const matches = resolveGesture(
      "tangrams",
      [{ kind: "slot", value: 1 }, { kind: "slot", value: 2 }],
      valid,
    );
    expect(matches).toEqual([{ type: "swap", args: { i: 1, j: 2 } }]);
  });
});
