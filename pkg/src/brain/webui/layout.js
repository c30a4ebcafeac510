/** Deterministic force-directed layout for a subgraph.
 *
 * d3-force is only nondeterministic when it has to invent positions; seeding
 * every node from a hash of its handle and ticking a stopped simulation a
 * fixed number of times makes the result a pure function of the input.
 */
/** Small stable string hash onto [0, 1). */
export function hash01(text) {
    let h = 2166136261;
    for (let i = 0; i < text.length; i++) {
        h ^= text.charCodeAt(i);
        h = Math.imul(h, 16777619);
    }
    return (h >>> 0) / 4294967296;
}
const TICKS = 200;
export function computeLayout(graph, width = 640, height = 420) {
    const nodes = graph.nodes.map((n) => ({
        handle: n.handle,
        x: width * (0.2 + 0.6 * hash01(n.handle)),
        y: height * (0.2 + 0.6 * hash01(n.handle + "/y")),
    }));
    const index = new Map(nodes.map((n) => [n.handle, n]));
    const links = graph.edges.map((e) => ({
        source: index.get(e.src),
        target: index.get(e.dst),
    }));
    const simulation = d3
        .forceSimulation(nodes)
        .force("charge", d3.forceManyBody().strength(-120))
        .force("link", d3.forceLink(links).distance(90))
        .force("center", d3.forceCenter(width / 2, height / 2))
        .stop();
    for (let i = 0; i < TICKS; i++) {
        simulation.tick();
    }
    const placed = new Map();
    for (const n of nodes) {
        placed.set(n.handle, { handle: n.handle, x: n.x, y: n.y });
    }
    return { nodes: placed, width, height };
}
