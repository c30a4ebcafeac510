/** Belief badge formatting shared by the graph view and the detail panel. */
export function beliefBadge(belief) {
    const tone = belief < 0.4 ? "low" : belief < 0.7 ? "mid" : "high";
    return { text: belief.toFixed(3), tone };
}
