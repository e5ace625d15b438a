"""Read-only HTTP search service over a built snippet index.

Wraps the core package behind two endpoints:

    GET /api/health            -> {"status": "ok"}
    GET /api/search?q=..&k=10  -> ranked snippets with scores

The service and the CLI share the same search code path, so a served query
returns exactly what ``snipsearch search`` prints for the same index. The
index is immutable for the lifetime of the process; concurrent requests
are safe.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .corpus import AnnotatedSnippet, SnippetCollection
from .index import SnippetIndex, search

logger = logging.getLogger(__name__)

MAX_RESULTS = 100
DEFAULT_RESULTS = 10


class SearchResultItem(BaseModel):
    rank: int
    id: str
    description: str
    code: str
    url: str | None
    score: float


class SearchResponse(BaseModel):
    query: str
    results: list[SearchResultItem]
    empty_encoding: bool = False


class HealthResponse(BaseModel):
    status: str


class ErrorResponse(BaseModel):
    error: str


@dataclass
class SearchEngine:
    """An index plus the snippet texts needed to render results."""

    index: SnippetIndex
    snippets: dict[str, AnnotatedSnippet]

    @classmethod
    def create(cls, index: SnippetIndex, collection: SnippetCollection) -> "SearchEngine":
        return cls(index=index, snippets={s.id: s for s in collection})

    def search(self, query: str, k: int) -> SearchResponse:
        outcome = search(self.index, query, k)
        results = []
        for rank, (snippet_id, score) in enumerate(outcome.results, start=1):
            snippet = self.snippets.get(snippet_id)
            if snippet is None:
                logger.warning("index row %r missing from collection", snippet_id)
                continue
            results.append(
                SearchResultItem(
                    rank=rank,
                    id=snippet_id,
                    description=snippet.description,
                    code=snippet.code,
                    url=snippet.url,
                    score=score,
                )
            )
        return SearchResponse(
            query=query, results=results, empty_encoding=outcome.empty_encoding
        )


def create_app(
    engine: SearchEngine,
    cors_origins: list[str] | None = None,
    ui_dir: str | Path | None = None,
) -> FastAPI:
    """Build the service around an immutable search engine."""
    app = FastAPI(title="snipsearch", docs_url=None, redoc_url=None)
    app.add_middleware(
        CORSMiddleware,
        allow_origins=cors_origins if cors_origins is not None else ["*"],
        allow_methods=["GET"],
        allow_headers=["*"],
    )

    def bad_request(message: str) -> JSONResponse:
        return JSONResponse(status_code=400, content={"error": message})

    @app.get("/api/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(status="ok")

    @app.get("/api/search", response_model=SearchResponse, responses={400: {"model": ErrorResponse}})
    def api_search(q: str | None = None, k: str = str(DEFAULT_RESULTS)):
        if q is None or not q.strip():
            return bad_request("missing query parameter q")
        try:
            k_value = int(k)
        except ValueError:
            return bad_request(f"k must be an integer, got {k!r}")
        if not 1 <= k_value <= MAX_RESULTS:
            return bad_request(f"k must be between 1 and {MAX_RESULTS}")
        try:
            return engine.search(q, k_value)
        except Exception:
            logger.exception("search failed for query %r", q)
            return JSONResponse(status_code=500, content={"error": "internal search error"})

    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
