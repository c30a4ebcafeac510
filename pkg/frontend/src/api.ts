/** Typed client for the knowledge engine HTTP API. */

export interface SubgraphNode {
  handle: string;
  name: string;
  type: string;
  belief: number;
  degree: number;
}

export interface SubgraphEdge {
  id: string;
  src: string;
  dst: string;
  edge_type: string;
  belief: number;
}

export interface Subgraph {
  center: string;
  radius: number;
  nodes: SubgraphNode[];
  edges: SubgraphEdge[];
}

export interface NodeDetail {
  handle: string;
  name: string;
  type: string;
  src: string;
  media_ref: string | null;
  belief: number;
  approvals: number;
  disapprovals: number;
  degree: number;
}

export interface FeedbackResult {
  target: string;
  belief: number;
}

export interface GraphOpResult {
  status: "applied" | "rejected";
  reason: string | null;
}

export interface Stats {
  node_count: number;
  edge_count: number;
  avg_degree: number;
  histogram: Record<string, number>;
}

export interface ApiError {
  code: string;
  message: string;
}

export class RequestFailed extends Error {
  constructor(
    readonly status: number,
    readonly body: ApiError,
  ) {
    super(`${body.code}: ${body.message}`);
  }
}

export type GraphOpAction =
  | "add_node"
  | "add_edge"
  | "delete_node"
  | "delete_edge"
  | "split"
  | "merge";

type Fetcher = typeof fetch;

export class ApiClient {
  constructor(
    private readonly user: string,
    private readonly fetcher: Fetcher = fetch,
    private readonly base = "",
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const headers: Record<string, string> = {
      "X-User": this.user,
      ...(init?.body ? { "Content-Type": "application/json" } : {}),
    };
    const response = await this.fetcher(this.base + path, { ...init, headers });
    const body = await response.json();
    if (!response.ok) {
      throw new RequestFailed(response.status, body as ApiError);
    }
    return body as T;
  }

  subgraph(center: string, radius = 1, limit = 100): Promise<Subgraph> {
    const params = new URLSearchParams({
      center,
      radius: String(radius),
      limit: String(limit),
    });
    return this.request(`/api/subgraph?${params}`);
  }

  node(handle: string): Promise<NodeDetail> {
    return this.request(`/api/nodes/${encodeURIComponent(handle)}`);
  }

  stats(): Promise<Stats> {
    return this.request("/api/stats");
  }

  feedback(
    target: string,
    verdict: "approve" | "disapprove",
  ): Promise<FeedbackResult> {
    return this.request("/api/feedback", {
      method: "POST",
      body: JSON.stringify({ target, verdict }),
    });
  }

  graphOp(
    action: GraphOpAction,
    args: Record<string, unknown>,
  ): Promise<GraphOpResult> {
    return this.request("/api/graph-ops", {
      method: "POST",
      body: JSON.stringify({ action, args }),
    });
  }
}
