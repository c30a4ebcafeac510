/** DOM rendering: an SVG graph pane plus a detail/curation sidebar. */

import type { GraphOpAction, Subgraph } from "./api.js";
import { beliefBadge } from "./badges.js";
import { CuratorController, CuratorState } from "./controller.js";
import { computeLayout } from "./layout.js";

const SVG_NS = "http://www.w3.org/2000/svg";

function svgEl(tag: string, attrs: Record<string, string>): SVGElement {
  const el = document.createElementNS(SVG_NS, tag);
  for (const [key, value] of Object.entries(attrs)) {
    el.setAttribute(key, value);
  }
  return el;
}

function renderGraph(
  container: HTMLElement,
  graph: Subgraph,
  selected: string | null,
  onSelect: (handle: string) => void,
): void {
  container.replaceChildren();
  const layout = computeLayout(graph);
  const svg = svgEl("svg", {
    viewBox: `0 0 ${layout.width} ${layout.height}`,
    class: "graph",
  });

  for (const edge of graph.edges) {
    const a = layout.nodes.get(edge.src)!;
    const b = layout.nodes.get(edge.dst)!;
    svg.appendChild(
      svgEl("line", {
        x1: String(a.x),
        y1: String(a.y),
        x2: String(b.x),
        y2: String(b.y),
        class: "edge",
      }),
    );
    const label = svgEl("text", {
      x: String((a.x + b.x) / 2),
      y: String((a.y + b.y) / 2 - 4),
      class: "edge-label",
    });
    label.textContent = `${edge.edge_type} · ${beliefBadge(edge.belief).text}`;
    svg.appendChild(label);
  }

  for (const node of graph.nodes) {
    const pos = layout.nodes.get(node.handle)!;
    const group = svgEl("g", {
      class: node.handle === selected ? "node selected" : "node",
      "data-handle": node.handle,
    });
    group.appendChild(
      svgEl("circle", { cx: String(pos.x), cy: String(pos.y), r: "16" }),
    );
    const name = svgEl("text", {
      x: String(pos.x),
      y: String(pos.y - 22),
      class: "node-label",
    });
    name.textContent = node.name;
    group.appendChild(name);
    const badge = beliefBadge(node.belief);
    const badgeText = svgEl("text", {
      x: String(pos.x),
      y: String(pos.y + 30),
      class: `belief-badge tone-${badge.tone}`,
    });
    badgeText.textContent = badge.text;
    group.appendChild(badgeText);
    group.addEventListener("click", () => onSelect(node.handle));
    svg.appendChild(group);
  }
  container.appendChild(svg);
}

function renderSidebar(root: HTMLElement, state: CuratorState): void {
  const detail = root.querySelector("#detail") as HTMLElement;
  detail.replaceChildren();
  if (state.selected) {
    const node = state.selected;
    const badge = state.selectedBadge!;
    const heading = document.createElement("h2");
    heading.textContent = `${node.name} (${node.type})`;
    const badgeEl = document.createElement("span");
    badgeEl.id = "selected-belief";
    badgeEl.className = `badge tone-${badge.tone}`;
    badgeEl.textContent = badge.text;
    const meta = document.createElement("p");
    meta.textContent =
      `${node.handle} · src ${node.src} · degree ${node.degree} · ` +
      `${node.approvals} up / ${node.disapprovals} down`;
    detail.append(heading, badgeEl, meta);
  } else {
    detail.textContent = "Select a node to review it.";
  }

  const outcome = root.querySelector("#proposal-outcome") as HTMLElement;
  if (state.proposalOutcome) {
    outcome.className = `outcome ${state.proposalOutcome.status}`;
    outcome.textContent =
      state.proposalOutcome.status === "applied"
        ? "applied"
        : `rejected: ${state.proposalOutcome.reason ?? "no reason given"}`;
  } else {
    outcome.textContent = "";
  }

  const error = root.querySelector("#error") as HTMLElement;
  error.textContent = state.error ?? "";
}

export function mount(root: HTMLElement, controller: CuratorController): void {
  root.innerHTML = `
    <header>
      <input id="center" placeholder="node handle, e.g. n1_0" />
      <button id="load">Load</button>
    </header>
    <main>
      <section id="graph-pane"></section>
      <aside>
        <div id="detail"></div>
        <div id="actions">
          <button id="approve">Approve</button>
          <button id="disapprove">Disapprove</button>
        </div>
        <form id="proposal">
          <select id="action">
            <option value="add_edge">add edge</option>
            <option value="merge">merge</option>
            <option value="delete_edge">delete edge</option>
            <option value="delete_node">delete node</option>
          </select>
          <input id="args" placeholder='{"src":"n1_0","dst":"n1_1","edge_type":"CanUse"}' />
          <button type="submit">Propose</button>
        </form>
        <div id="proposal-outcome"></div>
        <div id="error" role="alert"></div>
      </aside>
    </main>
  `;

  const graphPane = root.querySelector("#graph-pane") as HTMLElement;
  controller.subscribe((state) => {
    if (state.graph) {
      renderGraph(
        graphPane,
        state.graph,
        state.selected?.handle ?? null,
        (handle) => void controller.select(handle),
      );
    }
    renderSidebar(root, state);
  });

  (root.querySelector("#load") as HTMLElement).addEventListener("click", () => {
    const center = (root.querySelector("#center") as HTMLInputElement).value;
    if (center) {
      void controller.loadSubgraph(center);
    }
  });
  (root.querySelector("#approve") as HTMLElement).addEventListener(
    "click",
    () => void controller.vote("approve"),
  );
  (root.querySelector("#disapprove") as HTMLElement).addEventListener(
    "click",
    () => void controller.vote("disapprove"),
  );
  (root.querySelector("#proposal") as HTMLFormElement).addEventListener(
    "submit",
    (event) => {
      event.preventDefault();
      const action = (root.querySelector("#action") as HTMLSelectElement)
        .value as GraphOpAction;
      const raw = (root.querySelector("#args") as HTMLInputElement).value;
      let args: Record<string, unknown>;
      try {
        args = JSON.parse(raw || "{}");
      } catch {
        (root.querySelector("#error") as HTMLElement).textContent =
          "arguments must be valid JSON";
        return;
      }
      void controller.propose(action, args);
    },
  );
}
