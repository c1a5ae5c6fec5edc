// Wire types for the session service. The service is the single source of
// truth for world state; the client never computes a transition itself.

export type Domain = "alchemy" | "scene" | "tangrams" | "sail";

export interface ActionJson {
  type: string;
  args: Record<string, unknown>;
}

export interface PersonJson {
  shirt: string;
  hat: string | null;
}

export interface AlchemyStateJson {
  beakers: string[][];
}

export interface SceneStateJson {
  positions: (PersonJson | null)[];
}

export interface TangramsStateJson {
  figures: number[];
  history: [number, number][];
  step: number;
}

export interface SailStateJson {
  map: {
    nodes: [number, number][];
    edges: [number, number, number, number, { floor: string; wall: string }][];
    objects: [number, number, string][];
  };
  pose: { node: [number, number]; orientation: string };
}

export type StateJson =
  | AlchemyStateJson
  | SceneStateJson
  | TangramsStateJson
  | SailStateJson;

export interface SessionView {
  session_id: string;
  instance_id: string;
  domain: Domain;
  system: string;
  step: number;
  sentence_count: number;
  instruction: string | null;
  state: StateJson;
  valid_actions: ActionJson[];
  finished: boolean;
  done_all_sentences: boolean;
  done_sentence?: boolean;
}

export interface FinishResponse {
  success: boolean;
  session_id: string;
}

export class ApiError extends Error {
  constructor(
    public status: number,
    message: string,
  ) {
    super(message);
  }
}
