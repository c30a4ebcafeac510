/** UI state machine, kept free of the DOM so it can be tested headless.
 *
 * The view subscribes to state changes; every mutation goes through the API
 * client and re-reads server state rather than trusting local arithmetic.
 */

import {
  ApiClient,
  GraphOpAction,
  GraphOpResult,
  NodeDetail,
  RequestFailed,
  Subgraph,
} from "./api.js";
import { Badge, beliefBadge } from "./badges.js";

export interface CuratorState {
  graph: Subgraph | null;
  selected: NodeDetail | null;
  selectedBadge: Badge | null;
  proposalOutcome: GraphOpResult | null;
  error: string | null;
}

type Listener = (state: CuratorState) => void;

export class CuratorController {
  private state: CuratorState = {
    graph: null,
    selected: null,
    selectedBadge: null,
    proposalOutcome: null,
    error: null,
  };
  private listeners: Listener[] = [];

  constructor(private readonly api: ApiClient) {}

  subscribe(listener: Listener): void {
    this.listeners.push(listener);
    listener(this.state);
  }

  current(): CuratorState {
    return this.state;
  }

  private update(patch: Partial<CuratorState>): void {
    this.state = { ...this.state, ...patch };
    for (const listener of this.listeners) {
      listener(this.state);
    }
  }

  private fail(exc: unknown): void {
    const message =
      exc instanceof RequestFailed ? exc.body.message : String(exc);
    this.update({ error: message });
  }

  async loadSubgraph(center: string, radius = 2): Promise<void> {
    try {
      const graph = await this.api.subgraph(center, radius);
      this.update({ graph, error: null });
    } catch (exc) {
      this.fail(exc);
    }
  }

  async select(handle: string): Promise<void> {
    try {
      const selected = await this.api.node(handle);
      this.update({
        selected,
        selectedBadge: beliefBadge(selected.belief),
        error: null,
      });
    } catch (exc) {
      this.fail(exc);
    }
  }

  /** Record a verdict on the selected node, then re-read its detail so the
   * badge always shows what the server reports. */
  async vote(verdict: "approve" | "disapprove"): Promise<void> {
    const target = this.state.selected?.handle;
    if (!target) {
      return;
    }
    try {
      await this.api.feedback(target, verdict);
      await this.select(target);
      await this.refreshGraphBeliefs();
    } catch (exc) {
      this.fail(exc);
    }
  }

  async propose(
    action: GraphOpAction,
    args: Record<string, unknown>,
  ): Promise<void> {
    try {
      const proposalOutcome = await this.api.graphOp(action, args);
      this.update({ proposalOutcome, error: null });
      if (proposalOutcome.status === "applied" && this.state.graph) {
        await this.loadSubgraph(this.state.graph.center, this.state.graph.radius);
      }
    } catch (exc) {
      this.fail(exc);
    }
  }

  private async refreshGraphBeliefs(): Promise<void> {
    if (this.state.graph) {
      const { center, radius } = this.state.graph;
      const graph = await this.api.subgraph(center, radius);
      this.update({ graph });
    }
  }
}
