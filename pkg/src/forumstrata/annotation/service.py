"""HTTP annotation service for stratified samples.

Serves sample posts to annotators one at a time (in sample order, each
annotator independently), records their labels through the durable store,
reports live inter-annotator agreement, and exports the labeled data.
Annotators never see each other's labels before the resolution phase; the
agreement endpoint exposes only the kappa value and the conflicted post ids.

Identity is a bearer token from a small config mapping; with no tokens
configured the service runs open (desk/test mode) and any annotator id is
accepted.  The CSV export is an owner operation: in token mode it requires
the configured admin token.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Mapping, Optional

import numpy as np
from fastapi import FastAPI, Header, HTTPException, Query
from fastapi.responses import PlainTextResponse
from pydantic import BaseModel

from ..evaluation import cohen_kappa, fleiss_kappa
from ..graph import PopulationGraph
from .scheme import CodingScheme
from .store import AnnotationStore


@dataclass(frozen=True)
class SamplePost:
    post_id: str
    member_id: str
    bin_index: int
    content: str
    thread_title: str
    board_title: str


@dataclass(frozen=True)
class SampleBundle:
    sample_id: str
    posts: tuple[SamplePost, ...]

    def post(self, post_id: str) -> Optional[SamplePost]:
        for p in self.posts:
            if p.post_id == post_id:
                return p
        return None


def sample_bundle_from_population(
    sample_id: str, pop: PopulationGraph, sample
) -> SampleBundle:
    """Join sample entries (or a StratifiedSample) with content and titles."""
    entries = getattr(sample, "entries", sample)
    by_id = {p.post_id: p for p in pop.posts}
    posts = []
    for e in entries:
        post = by_id[e.post_id]
        board_id = pop.base.board_of_thread[post.thread_id]
        posts.append(
            SamplePost(
                post_id=e.post_id,
                member_id=e.member_id,
                bin_index=e.bin_index,
                content=post.content,
                thread_title=pop.base.threads[post.thread_id],
                board_title=pop.base.boards[board_id],
            )
        )
    return SampleBundle(sample_id=sample_id, posts=tuple(posts))


class LabelRequest(BaseModel):
    annotator: str
    post_id: str
    class_id: str


class ResolutionRequest(BaseModel):
    post_id: str
    class_id: str


def create_app(
    samples: Mapping[str, SampleBundle],
    scheme: CodingScheme,
    store: AnnotationStore,
    annotator_tokens: Optional[Mapping[str, str]] = None,
    admin_token: Optional[str] = None,
    ui_dir=None,
) -> FastAPI:
    app = FastAPI(title="forumstrata annotation service")
    tokens = dict(annotator_tokens or {})

    def auth_annotator(annotator: str, authorization: Optional[str]) -> None:
        if not tokens:
            return
        if annotator not in tokens:
            raise HTTPException(404, f"unknown annotator: {annotator}")
        expected = f"Bearer {tokens[annotator]}"
        if authorization != expected:
            raise HTTPException(403, "bad or missing bearer token")

    def get_sample(sample_id: str) -> SampleBundle:
        bundle = samples.get(sample_id)
        if bundle is None:
            raise HTTPException(404, f"unknown sample: {sample_id}")
        return bundle

    @app.get("/api/scheme")
    def get_scheme():
        return scheme.to_json()

    @app.get("/api/samples/{sample_id}/next")
    def next_unlabeled(
        sample_id: str,
        annotator: str = Query(...),
        authorization: Optional[str] = Header(default=None),
    ):
        auth_annotator(annotator, authorization)
        bundle = get_sample(sample_id)
        done_ids = set(store.labels_by_annotator(sample_id, annotator))
        total = len(bundle.posts)
        for ordinal, post in enumerate(bundle.posts):
            if post.post_id in done_ids:
                continue
            return {
                "done": False,
                "ordinal": ordinal,
                "total": total,
                "labeled": len(done_ids),
                "post": {
                    "post_id": post.post_id,
                    "content": post.content,
                    "thread_title": post.thread_title,
                    "board_title": post.board_title,
                    "bin_index": post.bin_index,
                },
            }
        return {"done": True, "total": total, "labeled": len(done_ids)}

    @app.post("/api/samples/{sample_id}/labels")
    def submit_label(
        sample_id: str,
        body: LabelRequest,
        authorization: Optional[str] = Header(default=None),
    ):
        auth_annotator(body.annotator, authorization)
        bundle = get_sample(sample_id)
        if bundle.post(body.post_id) is None:
            raise HTTPException(
                400, f"post {body.post_id} does not belong to sample {sample_id}"
            )
        if not scheme.has_class(body.class_id):
            raise HTTPException(400, f"unknown class: {body.class_id}")
        overwrote = store.set_label(
            sample_id, body.annotator, body.post_id, body.class_id
        )
        return {"ok": True, "post_id": body.post_id, "overwrote": overwrote}

    @app.post("/api/samples/{sample_id}/resolutions")
    def submit_resolution(
        sample_id: str,
        body: ResolutionRequest,
        authorization: Optional[str] = Header(default=None),
    ):
        if tokens and authorization != f"Bearer {admin_token}":
            raise HTTPException(403, "resolution requires the admin token")
        bundle = get_sample(sample_id)
        if bundle.post(body.post_id) is None:
            raise HTTPException(
                400, f"post {body.post_id} does not belong to sample {sample_id}"
            )
        if not scheme.has_class(body.class_id):
            raise HTTPException(400, f"unknown class: {body.class_id}")
        if store.label_count(sample_id, body.post_id) < 2:
            raise HTTPException(
                400, "resolution is only valid for posts with at least two labels"
            )
        store.set_resolution(sample_id, body.post_id, body.class_id)
        return {"ok": True, "post_id": body.post_id}

    @app.get("/api/samples/{sample_id}/agreement")
    def live_agreement(sample_id: str):
        bundle = get_sample(sample_id)
        labels = store.labels_for_sample(sample_id)
        annotators = store.annotators_for_sample(sample_id)
        ordinal = {p.post_id: i for i, p in enumerate(bundle.posts)}

        conflicts = []
        by_post: dict[str, list[str]] = {}
        for (post_id, _), class_id in labels.items():
            by_post.setdefault(post_id, []).append(class_id)
        for post_id, assigned in by_post.items():
            if len(assigned) >= 2 and len(set(assigned)) > 1:
                conflicts.append(post_id)
        conflicts.sort(key=lambda p: ordinal.get(p, len(ordinal)))

        if len(annotators) < 2:
            return {
                "insufficient_overlap": True,
                "reason": "fewer than two annotators have labeled this sample",
                "conflicts": conflicts,
            }
        co_labeled = [
            p.post_id
            for p in bundle.posts
            if all((p.post_id, a) in labels for a in annotators)
        ]
        if not co_labeled:
            return {
                "insufficient_overlap": True,
                "reason": "no post has been labeled by every annotator",
                "conflicts": conflicts,
            }
        if len(annotators) == 2:
            a, b = annotators
            result = cohen_kappa(
                [labels[(p, a)] for p in co_labeled],
                [labels[(p, b)] for p in co_labeled],
            )
        else:
            class_ids = scheme.class_ids()
            col = {c: i for i, c in enumerate(class_ids)}
            table = np.zeros((len(co_labeled), len(class_ids)), dtype=np.int64)
            for i, p in enumerate(co_labeled):
                for a in annotators:
                    table[i, col[labels[(p, a)]]] += 1
            result = fleiss_kappa(table)
        return {
            "insufficient_overlap": False,
            "kind": result.kind,
            "value": result.value,
            "n_items": result.n_items,
            "n_raters": result.n_raters,
            "annotators": annotators,
            "conflicts": conflicts,
        }

    @app.get("/api/samples/{sample_id}/export.csv", response_class=PlainTextResponse)
    def export_csv(
        sample_id: str, authorization: Optional[str] = Header(default=None)
    ):
        if tokens and authorization != f"Bearer {admin_token}":
            raise HTTPException(403, "export requires the admin token")
        bundle = get_sample(sample_id)
        return export_sample_csv(bundle, store)

    if ui_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")
    return app


def export_sample_csv(bundle: SampleBundle, store: AnnotationStore) -> str:
    """Label rows plus final rows (annotator column "resolution").

    A post's final class is its joint-resolution label when present,
    otherwise its unanimous label; conflicted unresolved posts get no final
    row.  Ordering follows the sample order, then annotator id.
    """
    labels = store.labels_for_sample(bundle.sample_id)
    resolutions = store.resolutions_for_sample(bundle.sample_id)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["post_id", "annotator_id", "class_id"])
    annotators = store.annotators_for_sample(bundle.sample_id)
    for post in bundle.posts:
        for a in annotators:
            key = (post.post_id, a)
            if key in labels:
                writer.writerow([post.post_id, a, labels[key]])
    for post in bundle.posts:
        assigned = [labels[(post.post_id, a)] for a in annotators if (post.post_id, a) in labels]
        if post.post_id in resolutions:
            writer.writerow([post.post_id, "resolution", resolutions[post.post_id]])
        elif assigned and len(set(assigned)) == 1:
            writer.writerow([post.post_id, "resolution", assigned[0]])
    return buf.getvalue()
