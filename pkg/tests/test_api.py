import numpy as np
import pytest
from fastapi.testclient import TestClient

from sentriage.pipeline import prepare_dataset, train_bundle
from sentriage.preprocess import SyntheticConfig, default_class_means, generate_synthetic
from sentriage.service import DecisionEngine
from sentriage.service.api import create_app


@pytest.fixture(scope="module")
def bundle():
    cfg = SyntheticConfig(
        class_count=3,
        samples_per_class=80,
        feature_dim=4,
        class_means=default_class_means(3, 4, 3.0),
        overlap_sigma=1.2,
        seed=11,
    )
    prepared = prepare_dataset(generate_synthetic(cfg), holdout_fraction=0.2, seed=11)
    return train_bundle(
        prepared.train_balanced, prepared.standardizer, n_trees=8, max_depth=6, seed=11
    )


@pytest.fixture()
def client(bundle, tmp_path):
    engine = DecisionEngine(bundle, tmp_path / "store")
    with TestClient(create_app(engine)) as c:
        yield c
    engine.close()


def confident(bundle, class_index=0):
    x = np.asarray(bundle.standardizer.means).copy()
    x[class_index] += 12.0 * max(np.asarray(bundle.standardizer.stddevs).max(), 1.0)
    return x.tolist()


def ambiguous(bundle):
    return list(bundle.standardizer.means)


class TestDecideEndpoint:
    def test_round_trip_matches_engine(self, bundle, tmp_path):
        engine = DecisionEngine(bundle, tmp_path / "s1")
        app = create_app(engine)
        x = confident(bundle)
        with TestClient(app) as client:
            body = client.post("/v1/decide", json={"sample_id": "a", "features": x}).json()
        direct = engine.score_sample(x, "a")
        assert body["label"] == direct.predicted_class
        assert body["T"] == direct.score.truth
        assert body["I"] == direct.score.indeterminacy
        assert body["F"] == direct.score.falsity
        assert body["abstained"] == direct.abstained
        assert body["applied_threshold"] == direct.applied_threshold
        assert body["policy_version"] == direct.policy_version
        engine.close()

    def test_response_shape(self, client, bundle):
        r = client.post("/v1/decide", json={"sample_id": "x1", "features": confident(bundle)})
        assert r.status_code == 200
        body = r.json()
        assert set(body) == {
            "sample_id", "label", "label_name", "binary_view",
            "T", "I", "F", "abstained", "applied_threshold", "policy_version",
        }
        assert body["binary_view"] == "malicious"  # synthetic classes are not "Normal"
        assert not body["abstained"]

    def test_abstained_binary_view_indeterminate(self, client, bundle):
        r = client.post("/v1/decide", json={"sample_id": "x2", "features": ambiguous(bundle)})
        body = r.json()
        assert body["abstained"]
        assert body["binary_view"] == "indeterminate"

    def test_dimension_mismatch_422(self, client):
        r = client.post("/v1/decide", json={"sample_id": "bad", "features": [1.0]})
        assert r.status_code == 422
        assert r.json()["error"]["code"] == "DIMENSION_MISMATCH"


class TestReviewEndpoints:
    def test_empty_queue(self, client):
        r = client.get("/v1/review", params={"status": "pending"})
        assert r.status_code == 200
        assert r.json() == []

    def test_verdict_flow(self, client, bundle):
        client.post("/v1/decide", json={"sample_id": "q1", "features": ambiguous(bundle)})
        items = client.get("/v1/review", params={"status": "pending"}).json()
        assert len(items) == 1
        item = items[0]
        assert item["status"] == "pending"
        assert item["decision"]["abstained"]

        r = client.post(f"/v1/review/{item['id']}/verdict", json={"verdict": "confirm"})
        assert r.status_code == 200
        assert r.json()["status"] == "confirmed"
        assert client.get("/v1/review", params={"status": "pending"}).json() == []

    def test_relabel_by_class_name(self, client, bundle):
        client.post("/v1/decide", json={"sample_id": "q2", "features": ambiguous(bundle)})
        item = client.get("/v1/review", params={"status": "pending"}).json()[0]
        r = client.post(
            f"/v1/review/{item['id']}/verdict",
            json={"verdict": "relabel", "label": "class_2"},
        )
        assert r.status_code == 200
        assert r.json()["status"] == "relabeled"
        assert r.json()["analyst_label"] == "class_2"

    def test_already_resolved_conflict(self, client, bundle):
        client.post("/v1/decide", json={"sample_id": "q3", "features": ambiguous(bundle)})
        item = client.get("/v1/review", params={"status": "pending"}).json()[0]
        client.post(f"/v1/review/{item['id']}/verdict", json={"verdict": "confirm"})
        r = client.post(f"/v1/review/{item['id']}/verdict", json={"verdict": "confirm"})
        assert r.status_code == 409
        assert r.json()["error"]["code"] == "ALREADY_RESOLVED"

    def test_verdict_on_missing_item_404(self, client):
        r = client.post("/v1/review/rev-424242/verdict", json={"verdict": "confirm"})
        assert r.status_code == 404
        assert r.json()["error"]["code"] == "NOT_FOUND"

    def test_pagination(self, client, bundle):
        for i in range(3):
            client.post("/v1/decide", json={"sample_id": f"pg{i}", "features": ambiguous(bundle)})
        p1 = client.get("/v1/review", params={"page": 1, "page_size": 2}).json()
        p2 = client.get("/v1/review", params={"page": 2, "page_size": 2}).json()
        assert len(p1) == 2 and len(p2) == 1
        assert len({i["id"] for i in p1 + p2}) == 3


class TestPolicyEndpoints:
    def test_get_policy(self, client):
        body = client.get("/v1/policy").json()
        assert body["mode"] == "GLOBAL"
        assert body["global_tau"] == 0.4
        assert body["version"] == 1

    def test_recalibrate_insufficient_data(self, client):
        r = client.post("/v1/policy/recalibrate", json={"percentile": 80})
        assert r.status_code == 400
        assert r.json()["error"]["code"] == "INSUFFICIENT_DATA"

    def test_recalibrate_after_verdicts(self, client, bundle):
        for i in range(5):
            client.post("/v1/decide", json={"sample_id": f"rc{i}", "features": ambiguous(bundle)})
        for item in client.get("/v1/review", params={"status": "pending"}).json():
            client.post(f"/v1/review/{item['id']}/verdict", json={"verdict": "confirm"})
        r = client.post("/v1/policy/recalibrate", json={"percentile": 80})
        assert r.status_code == 200
        body = r.json()
        assert body["mode"] == "PER_CLASS"
        assert body["version"] == 2
        assert set(body["per_class_tau"]) == {"class_0", "class_1", "class_2"}


class TestMetricsEndpoint:
    def test_counts(self, client, bundle):
        client.post("/v1/decide", json={"sample_id": "m1", "features": confident(bundle)})
        client.post("/v1/decide", json={"sample_id": "m2", "features": ambiguous(bundle)})
        body = client.get("/v1/metrics").json()
        assert body["decisions"] == 2
        assert body["abstentions"] == 1
        assert body["pending_reviews"] == 1
        assert set(body["per_class_flag_rates"]) == {"class_0", "class_1", "class_2"}
        assert body["preview"] is None

    def test_preview_is_pure(self, client, bundle):
        for i in range(6):
            client.post("/v1/decide", json={"sample_id": f"pv{i}", "features": ambiguous(bundle)})
        before = client.get("/v1/policy").json()
        preview = client.get("/v1/metrics", params={"preview_percentile": 100}).json()["preview"]
        assert preview["percentile"] == 100
        assert all(rate == 0.0 for rate in preview["projected_flag_rates"].values())
        assert client.get("/v1/policy").json() == before
