/** UI state machine, kept free of the DOM so it can be tested headless.
 *
 * The view subscribes to state changes; every mutation goes through the API
 * client and re-reads server state rather than trusting local arithmetic.
 */
import { RequestFailed, } from "./api.js";
import { beliefBadge } from "./badges.js";
export class CuratorController {
    constructor(api) {
        this.api = api;
        this.state = {
            graph: null,
            selected: null,
            selectedBadge: null,
            proposalOutcome: null,
            error: null,
        };
        this.listeners = [];
    }
    subscribe(listener) {
        this.listeners.push(listener);
        listener(this.state);
    }
    current() {
        return this.state;
    }
    update(patch) {
        this.state = { ...this.state, ...patch };
        for (const listener of this.listeners) {
            listener(this.state);
        }
    }
    fail(exc) {
        const message = exc instanceof RequestFailed ? exc.body.message : String(exc);
        this.update({ error: message });
    }
    async loadSubgraph(center, radius = 2) {
        try {
            const graph = await this.api.subgraph(center, radius);
            this.update({ graph, error: null });
        }
        catch (exc) {
            this.fail(exc);
        }
    }
    async select(handle) {
        try {
            const selected = await this.api.node(handle);
            this.update({
                selected,
                selectedBadge: beliefBadge(selected.belief),
                error: null,
            });
        }
        catch (exc) {
            this.fail(exc);
        }
    }
    /** Record a verdict on the selected node, then re-read its detail so the
     * badge always shows what the server reports. */
    async vote(verdict) {
        const target = this.state.selected?.handle;
        if (!target) {
            return;
        }
        try {
            await this.api.feedback(target, verdict);
            await this.select(target);
            await this.refreshGraphBeliefs();
        }
        catch (exc) {
            this.fail(exc);
        }
    }
    async propose(action, args) {
        try {
            const proposalOutcome = await this.api.graphOp(action, args);
            this.update({ proposalOutcome, error: null });
            if (proposalOutcome.status === "applied" && this.state.graph) {
                await this.loadSubgraph(this.state.graph.center, this.state.graph.radius);
            }
        }
        catch (exc) {
            this.fail(exc);
        }
    }
    async refreshGraphBeliefs() {
        if (this.state.graph) {
            const { center, radius } = this.state.graph;
            const graph = await this.api.subgraph(center, radius);
            this.update({ graph });
        }
    }
}
