"""HTTP facade over the engine: feeds, queries, feedback, curation."""

from __future__ import annotations

from pathlib import Path
from typing import Optional

from fastapi import FastAPI, Request, Response
from fastapi.responses import FileResponse, JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .engine import Engine
from .errors import (EdgeTypeError, FeedError, NotFoundError, RqlEvalError,
                     RqlSyntaxError, ValidationError)
from .feedback import GraphEditProposal


class QueryRequest(BaseModel):
    program: str
    max_results: Optional[int] = None


class FeedbackRequest(BaseModel):
    target: str
    verdict: str
    user: Optional[str] = None


class GraphOpRequest(BaseModel):
    action: str
    args: dict = {}
    proposer: Optional[str] = None


def _error(status: int, code: str, message: str, position=None) -> JSONResponse:
    body = {"code": code, "message": message}
    if position:
        body["position"] = position
    return JSONResponse(status_code=status, content=body)


def create_app(engine: Engine, ui_dir: Optional[str | Path] = None) -> FastAPI:
    app = FastAPI(title="knowledge engine", docs_url=None, redoc_url=None)

    def user_of(request: Request, fallback: Optional[str]) -> str:
        return request.headers.get("x-user") or fallback or "anonymous"

    @app.exception_handler(NotFoundError)
    async def _nf(request, exc):
        return _error(404, "not_found", str(exc))

    @app.exception_handler(ValidationError)
    async def _bad(request, exc):
        return _error(400, "invalid", str(exc))

    @app.post("/api/feeds")
    async def post_feed(request: Request):
        body = (await request.body()).decode("utf-8", errors="replace")
        try:
            report = engine.ingest_text(body)
        except FeedError as exc:
            status = 422 if "unregistered edge types" in str(exc) else 400
            return _error(status, "bad_feed", str(exc))
        return {
            "feed_id": report.feed_id,
            "seq": report.seq,
            "nodes_added": report.nodes_added,
            "edges_added": report.edges_added,
            "ops_applied": report.ops_applied,
        }

    @app.post("/api/query")
    async def post_query(body: QueryRequest):
        try:
            return engine.query(body.program, body.max_results)
        except RqlSyntaxError as exc:
            return _error(400, "syntax_error", exc.message,
                          {"line": exc.line, "col": exc.col,
                           "expected": list(exc.expected)})
        except (RqlEvalError, EdgeTypeError) as exc:
            return _error(422, "eval_error", str(exc))

    @app.post("/api/feedback")
    async def post_feedback(body: FeedbackRequest, request: Request):
        belief = engine.record_feedback(
            body.target, body.verdict, user_of(request, body.user))
        return {"target": body.target, "belief": belief}

    @app.post("/api/graph-ops")
    async def post_graph_op(body: GraphOpRequest, request: Request):
        proposal = GraphEditProposal(
            action=body.action, args=body.args,
            proposer=user_of(request, body.proposer))
        proposal = engine.apply_graph_edit(proposal)
        return {"status": proposal.status, "reason": proposal.reason}

    @app.get("/api/subgraph")
    async def get_subgraph(center: str, radius: int = 1, limit: int = 100):
        return engine.subgraph(center, radius, limit)

    @app.get("/api/stats")
    async def get_stats():
        stats = engine.stats()
        stats["histogram"] = {str(k): v for k, v in stats["histogram"].items()}
        return stats

    @app.get("/api/nodes/{handle}")
    async def get_node(handle: str):
        return engine.node_detail(handle)

    ui = Path(ui_dir) if ui_dir else Path(__file__).parent / "webui"
    if ui.is_dir():
        app.mount("/", StaticFiles(directory=str(ui), html=True), name="ui")

    return app
