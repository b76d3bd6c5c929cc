"""Labeling service over HTTP: item serving, submission, stats, concurrency."""

from __future__ import annotations

import threading

import numpy as np
import pytest
from fastapi.testclient import TestClient

from streetrate import labelsvc
from streetrate.dataset import REFERENCE_SHARES, ImageRecord, LabelStore
from streetrate.features import FeatureVector
from streetrate.labelsvc import LabelService, create_app
from streetrate.model import Hyperparams, train_binary


def _images(tmp_path, n=4):
    out = []
    for k in range(n):
        path = tmp_path / f"img_{k}.png"
        from PIL import Image

        Image.fromarray(np.full((20, 20), 60 * k % 255, dtype=np.uint8), mode="L").save(path)
        out.append(ImageRecord(f"img_{k}", f"p{k}", "s1", str(path), 20, 20))
    return out


@pytest.fixture()
def service(tmp_path):
    return LabelService(_images(tmp_path), LabelStore(tmp_path / "labels.jsonl"))


@pytest.fixture()
def client(service):
    return TestClient(create_app(service=service))


# ------------------------------------------------------------- next_item


def test_sequential_serves_lowest_id_first(client):
    r = client.get("/api/next", params={"task": "quality", "rater": "r1"})
    assert r.status_code == 200
    body = r.json()
    assert body["image_id"] == "img_0"
    assert body["image_url"] == "/images/img_0"
    assert body["task"] == "quality"
    assert body["progress"] == {"labeled": 0, "total": 4}


def test_sequential_does_not_reserve_until_exhausted(client):
    seen = [client.get("/api/next", params={"task": "quality", "rater": "r1"}).json()["image_id"] for _ in range(4)]
    assert seen == ["img_0", "img_1", "img_2", "img_3"]
    # all unlabeled served once; the cycle restarts rather than starving
    again = client.get("/api/next", params={"task": "quality", "rater": "r1"}).json()["image_id"]
    assert again == "img_0"


def test_corpus_exhausted_after_labeling_everything(client):
    for k in range(4):
        resp = client.post(
            "/api/labels",
            json={"image_id": f"img_{k}", "task": "quality", "value": 3, "rater_id": "r1"},
        )
        assert resp.status_code == 201
    r = client.get("/api/next", params={"task": "quality", "rater": "r1"})
    assert r.status_code == 404
    assert r.json()["error"] == "corpus_exhausted"
    # a different rater still gets items
    assert client.get("/api/next", params={"task": "quality", "rater": "r2"}).status_code == 200


def test_uncertain_strategy_picks_smallest_margin(tmp_path):
    images = _images(tmp_path)
    X = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]])
    m = train_binary(X, [1, 1, 0, 0], Hyperparams(lam=1e-2, epochs=20, seed=1, normalize="none"))
    m.weights[:] = np.array([[1.0, 0.0]])
    m.bias[:] = 0.0
    feats = {
        "img_0": FeatureVector("img_0", "", np.array([0.9, 0.0])),
        "img_1": FeatureVector("img_1", "", np.array([0.1, 0.0])),
        "img_2": FeatureVector("img_2", "", np.array([-0.5, 0.0])),
        "img_3": FeatureVector("img_3", "", np.array([2.0, 0.0])),
    }
    svc = LabelService(
        images, LabelStore(tmp_path / "l.jsonl"), models={"qualification": m}, features=feats
    )
    client = TestClient(create_app(service=svc))
    r = client.get(
        "/api/next", params={"task": "qualification", "rater": "r1", "strategy": "uncertain"}
    ).json()
    assert r["image_id"] == "img_1"  # |0.1| is the smallest decision magnitude
    assert "warning" not in r


def test_uncertain_without_model_falls_back_with_warning(client):
    r = client.get(
        "/api/next", params={"task": "quality", "rater": "r1", "strategy": "uncertain"}
    ).json()
    assert r["image_id"] == "img_0"
    assert "falling back" in r["warning"]


# ---------------------------------------------------------------- submit


def test_submit_happy_path_and_roundtrip(client, service):
    resp = client.post(
        "/api/labels", json={"image_id": "img_2", "task": "quality", "value": 3, "rater_id": "amy"}
    )
    assert resp.status_code == 201
    body = resp.json()
    assert body["image_id"] == "img_2" and body["value"] == 3 and body["ts"] > 0
    # visible in stats and on disk immediately
    stats = client.get("/api/stats", params={"task": "quality"}).json()
    assert stats["counts"]["3"] == 1
    assert len(service.store.records()) == 1


def test_submit_out_of_range_value(client):
    resp = client.post(
        "/api/labels", json={"image_id": "img_0", "task": "quality", "value": 0, "rater_id": "a"}
    )
    assert resp.status_code == 422
    resp = client.post(
        "/api/labels", json={"image_id": "img_0", "task": "quality", "value": 5, "rater_id": "a"}
    )
    assert resp.status_code == 422


def test_submit_unknown_image(client):
    resp = client.post(
        "/api/labels", json={"image_id": "ghost", "task": "quality", "value": 2, "rater_id": "a"}
    )
    assert resp.status_code == 404


def test_submit_unknown_task(client):
    resp = client.post(
        "/api/labels", json={"image_id": "img_0", "task": "beauty", "value": 1, "rater_id": "a"}
    )
    assert resp.status_code == 422


# ----------------------------------------------------------------- stats


def test_stats_empty(client):
    body = client.get("/api/stats", params={"task": "continuity"}).json()
    assert body["counts"] == {"0": 0, "1": 0}
    assert body["shares"] == {"0": 0.0, "1": 0.0}
    assert body["reference_shares"] == {str(k): v for k, v in REFERENCE_SHARES["continuity"].items()}


def test_stats_shares_arithmetic(client):
    for image, value in (("img_0", 1), ("img_1", 1), ("img_2", 0)):
        client.post(
            "/api/labels",
            json={"image_id": image, "task": "continuity", "value": value, "rater_id": "a"},
        )
    body = client.get("/api/stats", params={"task": "continuity"}).json()
    assert body["counts"] == {"0": 1, "1": 2}
    assert body["shares"]["1"] == pytest.approx(66.7, abs=0.1)
    assert body["shares"]["0"] == pytest.approx(33.3, abs=0.1)


def test_quality_reference_shares_fixture(client):
    body = client.get("/api/stats", params={"task": "quality"}).json()
    assert body["reference_shares"] == {"4": 18.8, "3": 41.9, "2": 31.4, "1": 7.8}


# ------------------------------------------------------------------ misc


def test_tasks_endpoint(client):
    body = client.get("/api/tasks").json()
    assert [row["task"] for row in body] == ["qualification", "quality", "continuity"]
    assert all(row["total"] == 4 for row in body)


def test_image_bytes_served_with_content_type(client, service):
    resp = client.get("/images/img_1")
    assert resp.status_code == 200
    assert resp.headers["content-type"] == "image/png"
    assert resp.content[:8] == b"\x89PNG\r\n\x1a\n"
    assert client.get("/images/ghost").status_code == 404


def test_progress_counts_resolved_images(client):
    client.post("/api/labels", json={"image_id": "img_0", "task": "quality", "value": 1, "rater_id": "a"})
    client.post("/api/labels", json={"image_id": "img_0", "task": "quality", "value": 2, "rater_id": "b"})
    r = client.get("/api/next", params={"task": "quality", "rater": "c"}).json()
    assert r["progress"] == {"labeled": 1, "total": 4}  # one image labeled, twice


def test_concurrent_submissions_line_atomic(client, service):
    n_threads, per_thread = 6, 10
    codes = []

    def work(tid):
        for k in range(per_thread):
            resp = client.post(
                "/api/labels",
                json={
                    "image_id": f"img_{k % 4}",
                    "task": "quality",
                    "value": 1 + (k % 4),
                    "rater_id": f"t{tid}",
                },
            )
            codes.append(resp.status_code)

    threads = [threading.Thread(target=work, args=(t,)) for t in range(n_threads)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert codes.count(201) == n_threads * per_thread
    records = service.store.records()
    assert len(records) == n_threads * per_thread  # store lines == 201 responses


def test_sequential_deterministic_for_fresh_session(tmp_path):
    images = _images(tmp_path)
    store = LabelStore(tmp_path / "l.jsonl")
    a = LabelService(images, store).next_item(labelsvc.LabelingSession("r", "quality"))
    b = LabelService(images, store).next_item(labelsvc.LabelingSession("r", "quality"))
    assert a.image_id == b.image_id
