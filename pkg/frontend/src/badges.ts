/** Belief badge formatting shared by the graph view and the detail panel. */

export type BadgeTone = "low" | "mid" | "high";

export interface Badge {
  text: string;
  tone: BadgeTone;
}

export function beliefBadge(belief: number): Badge {
  const tone: BadgeTone = belief < 0.4 ? "low" : belief < 0.7 ? "mid" : "high";
  return { text: belief.toFixed(3), tone };
}
