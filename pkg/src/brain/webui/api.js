/** Typed client for the knowledge engine HTTP API. */
export class RequestFailed extends Error {
    constructor(status, body) {
        super(`${body.code}: ${body.message}`);
        this.status = status;
        this.body = body;
    }
}
export class ApiClient {
    constructor(user, fetcher = fetch, base = "") {
        this.user = user;
        this.fetcher = fetcher;
        this.base = base;
    }
    async request(path, init) {
        const headers = {
            "X-User": this.user,
            ...(init?.body ? { "Content-Type": "application/json" } : {}),
        };
        const response = await this.fetcher(this.base + path, { ...init, headers });
        const body = await response.json();
        if (!response.ok) {
            throw new RequestFailed(response.status, body);
        }
        return body;
    }
    subgraph(center, radius = 1, limit = 100) {
        const params = new URLSearchParams({
            center,
            radius: String(radius),
            limit: String(limit),
        });
        return this.request(`/api/subgraph?${params}`);
    }
    node(handle) {
        return this.request(`/api/nodes/${encodeURIComponent(handle)}`);
    }
    stats() {
        return this.request("/api/stats");
    }
    feedback(target, verdict) {
        return this.request("/api/feedback", {
            method: "POST",
            body: JSON.stringify({ target, verdict }),
        });
    }
    graphOp(action, args) {
        return this.request("/api/graph-ops", {
            method: "POST",
            body: JSON.stringify({ action, args }),
        });
    }
}
