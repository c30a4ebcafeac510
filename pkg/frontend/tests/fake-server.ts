/** In-memory stand-in for the engine's HTTP API, faithful to its contract:
 * Beta-Bernoulli beliefs with a trust-0.5 prior, one vote per user with the
 * latest verdict winning, and structured error bodies.
 */

interface FakeNode {
  handle: string;
  name: string;
  type: string;
  src: string;
  votes: Map<string, "approve" | "disapprove">;
}

interface FakeEdge {
  id: string;
  src: string;
  dst: string;
  edge_type: string;
  votes: Map<string, "approve" | "disapprove">;
}

function belief(votes: Map<string, string>): number {
  let approvals = 0;
  let disapprovals = 0;
  for (const verdict of votes.values()) {
    if (verdict === "approve") approvals++;
    else disapprovals++;
  }
  // trust 0.5 prior: alpha0 = beta0 = 1 + 4 * 0.5 = 3
  return (3 + approvals) / (6 + approvals + disapprovals);
}

export class FakeServer {
  nodes = new Map<string, FakeNode>();
  edges = new Map<string, FakeEdge>();
  private nextEdge = 100;

  /** The disambiguated Cup/Mug neighborhood from the walkthrough fixture. */
  static walkthrough(): FakeServer {
    const server = new FakeServer();
    const add = (handle: string, name: string, type: string) =>
      server.nodes.set(handle, {
        handle,
        name,
        type,
        src: "object_db",
        votes: new Map(),
      });
    add("n1_0", "Cup", "Word");
    add("n1_1", "Crockery", "Word");
    add("n1_2", "cup1", "Image");
    add("n1_3", "cup2", "Image");
    add("n2_0", "SittingHuman", "Word");
    add("n3_1", "Mug", "Word");
    add("n3_2", "mug1", "Image");
    add("n3_3", "mug2", "Image");
    const link = (id: string, src: string, dst: string, edge_type: string) =>
      server.edges.set(id, { id, src, dst, edge_type, votes: new Map() });
    link("e1_0", "n1_0", "n1_1", "IsTypeOf");
    link("e1_1", "n1_0", "n1_2", "HasAppearance");
    link("e1_2", "n1_0", "n1_3", "HasAppearance");
    link("e3_0", "n3_1", "n3_2", "HasAppearance");
    link("e3_1", "n3_1", "n3_3", "HasAppearance");
    link("e3_2", "n2_0", "n3_1", "CanUse");
    link("e3_3", "n3_1", "n1_0", "IsTypeOf");
    return server;
  }

  nodeBelief(handle: string): number {
    return belief(this.nodes.get(handle)!.votes);
  }

  fetch = async (
    input: RequestInfo | URL,
    init?: RequestInit,
  ): Promise<Response> => {
    const url = new URL(String(input), "http://fake");
    const method = init?.method ?? "GET";
    const user =
      new Headers(init?.headers).get("X-User") ?? "anonymous";
    const body = init?.body ? JSON.parse(String(init.body)) : null;
    try {
      return this.route(url, method, user, body);
    } catch (exc) {
      return json(500, { code: "internal", message: String(exc) });
    }
  };

  private route(
    url: URL,
    method: string,
    user: string,
    body: any,
  ): Response {
    const path = url.pathname;
    if (method === "GET" && path === "/api/subgraph") {
      return this.subgraph(
        url.searchParams.get("center")!,
        Number(url.searchParams.get("radius") ?? "1"),
      );
    }
    if (method === "GET" && path.startsWith("/api/nodes/")) {
      return this.nodeDetail(path.slice("/api/nodes/".length));
    }
    if (method === "GET" && path === "/api/stats") {
      return json(200, {
        node_count: this.nodes.size,
        edge_count: this.edges.size,
        avg_degree: (2 * this.edges.size) / Math.max(1, this.nodes.size),
        histogram: {},
      });
    }
    if (method === "POST" && path === "/api/feedback") {
      return this.feedback(body.target, body.verdict, user);
    }
    if (method === "POST" && path === "/api/graph-ops") {
      return this.graphOp(body.action, body.args ?? {});
    }
    return json(404, { code: "not_found", message: `no route ${path}` });
  }

  private degree(handle: string): number {
    let n = 0;
    for (const edge of this.edges.values()) {
      if (edge.src === handle || edge.dst === handle) n++;
    }
    return n;
  }

  private subgraph(center: string, radius: number): Response {
    if (!this.nodes.has(center)) {
      return json(404, { code: "not_found", message: `no node ${center}` });
    }
    const seen = new Set([center]);
    let frontier = [center];
    for (let hop = 0; hop < radius; hop++) {
      const next: string[] = [];
      for (const handle of frontier) {
        for (const edge of this.edges.values()) {
          for (const other of [edge.src, edge.dst]) {
            if (
              (edge.src === handle || edge.dst === handle) &&
              !seen.has(other)
            ) {
              seen.add(other);
              next.push(other);
            }
          }
        }
      }
      frontier = next;
    }
    return json(200, {
      center,
      radius,
      nodes: [...seen].sort().map((handle) => {
        const node = this.nodes.get(handle)!;
        return {
          handle,
          name: node.name,
          type: node.type,
          belief: belief(node.votes),
          degree: this.degree(handle),
        };
      }),
      edges: [...this.edges.values()]
        .filter((e) => seen.has(e.src) && seen.has(e.dst))
        .map((e) => ({
          id: e.id,
          src: e.src,
          dst: e.dst,
          edge_type: e.edge_type,
          belief: belief(e.votes),
        })),
    });
  }

  private nodeDetail(handle: string): Response {
    const node = this.nodes.get(handle);
    if (!node) {
      return json(404, { code: "not_found", message: `no node ${handle}` });
    }
    let approvals = 0;
    let disapprovals = 0;
    for (const verdict of node.votes.values()) {
      if (verdict === "approve") approvals++;
      else disapprovals++;
    }
    return json(200, {
      handle,
      name: node.name,
      type: node.type,
      src: node.src,
      media_ref: null,
      belief: belief(node.votes),
      approvals,
      disapprovals,
      degree: this.degree(handle),
    });
  }

  private feedback(target: string, verdict: string, user: string): Response {
    if (verdict !== "approve" && verdict !== "disapprove") {
      return json(400, { code: "invalid", message: `bad verdict ${verdict}` });
    }
    const item = this.nodes.get(target) ?? this.edges.get(target);
    if (!item) {
      return json(404, { code: "not_found", message: `no target ${target}` });
    }
    item.votes.set(user, verdict);
    return json(200, { target, belief: belief(item.votes) });
  }

  private graphOp(action: string, args: any): Response {
    const reject = (reason: string) =>
      json(200, { status: "rejected", reason });
    if (action === "add_edge") {
      if (!this.nodes.has(args.src) || !this.nodes.has(args.dst)) {
        return reject("both endpoints must be live nodes");
      }
      const id = `e${this.nextEdge++}_0`;
      this.edges.set(id, {
        id,
        src: args.src,
        dst: args.dst,
        edge_type: args.edge_type,
        votes: new Map(),
      });
      return json(200, { status: "applied", reason: null });
    }
    if (action === "merge") {
      if (args.a === args.b) {
        return reject("cannot merge a node with itself");
      }
      if (!this.nodes.has(args.a) || !this.nodes.has(args.b)) {
        return reject("both nodes must be live");
      }
      return json(200, { status: "applied", reason: null });
    }
    if (action === "delete_node" || action === "delete_edge") {
      return reject("deletion is disabled in this fixture");
    }
    return reject(`unknown action '${action}'`);
  }
}

function json(status: number, body: unknown): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}
