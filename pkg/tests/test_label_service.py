import json
import urllib.error
import urllib.request

import pytest

from vlameter.labelstore import LabelStore, LabelStoreError, load_final_labels
from vlameter.labelservice import LabelService, RunIndex, ServiceServer
from vlameter.synth import generate_synthetic
from vlameter.traceio import write_trace


def _traces(n_success=4, n_fail=2):
    traces = [
        generate_synthetic("smooth", "pick_up", seed=i, include_tokens=False, include_ev=False)
        for i in range(n_success)
    ]
    traces += [
        generate_synthetic("failing", "pick_up", seed=100 + i, include_tokens=False,
                           include_ev=False)
        for i in range(n_fail)
    ]
    return traces


@pytest.fixture
def service(tmp_path):
    index = RunIndex(_traces())
    store = LabelStore(tmp_path / "labels.log.jsonl")
    return LabelService(index, store, batch_limit=160)


class TestLabelStore:
    def test_submit_and_replay(self, tmp_path):
        path = tmp_path / "log.jsonl"
        store = LabelStore(path)
        store.submit("r1", "alice", "high", "s1")
        store.submit("r2", "alice", "low", "s1")
        store.submit("r1", "bob", "high", "s2")
        replayed = LabelStore(path)
        assert {(e.run_id, e.annotator_id, e.label) for e in replayed.effective_labels()} == {
            ("r1", "alice", "high"),
            ("r2", "alice", "low"),
            ("r1", "bob", "high"),
        }

    def test_overwrite_keeps_audit_trail(self, tmp_path):
        store = LabelStore(tmp_path / "log.jsonl")
        first = store.submit("r1", "alice", "high", "s1")
        second = store.submit("r1", "alice", "low", "s1")
        assert first["overwrote"] is False
        assert second["overwrote"] is True
        assert len(store.events()) == 2  # audit keeps both
        effective = store.labels_for_run("r1")
        assert len(effective) == 1 and effective[0].label == "low"
        # replay reconstructs the same final state
        replayed = LabelStore(store.path)
        assert replayed.labels_for_run("r1")[0].label == "low"
        assert len(replayed.events()) == 2

    def test_resolution_agreement(self, tmp_path):
        store = LabelStore(tmp_path / "log.jsonl")
        store.submit("r1", "alice", "high")
        store.submit("r1", "bob", "high")
        resolved, unresolved = store.resolutions()
        assert resolved["r1"].label == "high"
        assert resolved["r1"].resolver_id is None
        assert unresolved == []

    def test_resolution_tie_break(self, tmp_path):
        store = LabelStore(tmp_path / "log.jsonl")
        store.submit("r1", "alice", "high")
        store.submit("r1", "bob", "low")
        resolved, unresolved = store.resolutions()
        assert unresolved == ["r1"]
        store.submit("r1", "carol", "low")
        resolved, unresolved = store.resolutions()
        assert resolved["r1"].label == "low"
        assert resolved["r1"].resolver_id == "carol"
        assert unresolved == []

    def test_export_blocked_until_resolved(self, tmp_path):
        store = LabelStore(tmp_path / "log.jsonl")
        store.submit("r1", "alice", "high")
        store.submit("r1", "bob", "low")
        with pytest.raises(LabelStoreError, match="r1"):
            store.export(tmp_path / "out")
        result = store.export(tmp_path / "out", partial=True)
        assert result["unresolved"] == ["r1"]
        store.submit("r1", "carol", "high")
        result = store.export(tmp_path / "out")
        finals = load_final_labels(result["resolved_csv"])
        assert finals == {"r1": "high"}

    def test_unknown_label_rejected(self, tmp_path):
        store = LabelStore(tmp_path / "log.jsonl")
        with pytest.raises(LabelStoreError, match="unknown label"):
            store.submit("r1", "alice", "amazing")


class TestServiceLogic:
    def test_next_batch_only_successful(self, service):
        batch = service.next_batch("alice", "s1")
        ids = [r["run_id"] for r in batch["runs"]]
        assert len(ids) == 4
        assert ids == sorted(ids)
        assert all(service.index.success[r] for r in ids)

    def test_next_batch_excludes_labeled(self, service):
        first = service.next_batch("alice", "s1")["runs"][0]["run_id"]
        service.submit_label(
            {"run_id": first, "annotator_id": "alice", "label": "high", "session_id": "s1"}
        )
        batch = service.next_batch("alice", "s2")
        assert first not in [r["run_id"] for r in batch["runs"]]

    def test_session_cap(self, service):
        runs = service.next_batch("alice", "s1", limit=2)
        assert len(runs["runs"]) == 2
        for r in runs["runs"]:
            service.submit_label(
                {"run_id": r["run_id"], "annotator_id": "alice", "label": "high",
                 "session_id": "s1"}
            )
        assert service.next_batch("alice", "s1", limit=2)["runs"] == []
        # a fresh session can continue
        assert len(service.next_batch("alice", "s2", limit=2)["runs"]) == 2

    def test_label_failing_run_rejected(self, service):
        failing = next(r for r, ok in service.index.success.items() if not ok)
        with pytest.raises(LabelStoreError, match="not oracle-successful"):
            service.submit_label(
                {"run_id": failing, "annotator_id": "alice", "label": "high"}
            )

    def test_unknown_run_rejected(self, service):
        with pytest.raises(KeyError):
            service.submit_label(
                {"run_id": "nope", "annotator_id": "alice", "label": "high"}
            )

    def test_agreement_treats_false_negative_as_category(self, service):
        ids = [r["run_id"] for r in service.next_batch("alice", "s")["runs"]]
        labels_a = ["high", "high", "false_negative", "low"]
        labels_b = ["high", "medium", "false_negative", "low"]
        for rid, la, lb in zip(ids, labels_a, labels_b):
            service.submit_label({"run_id": rid, "annotator_id": "a", "label": la})
            service.submit_label({"run_id": rid, "annotator_id": "b", "label": lb})
        result = service.agreement("a", "b")
        assert result["n_items"] == 4
        assert result["observed_agreement"] == 0.75
        assert len(result["disagreements"]) == 1


def _get(url):
    with urllib.request.urlopen(url, timeout=10) as resp:
        return json.loads(resp.read())


def _post(url, payload):
    req = urllib.request.Request(
        url, data=json.dumps(payload).encode(), headers={"Content-Type": "application/json"}
    )
    with urllib.request.urlopen(req, timeout=10) as resp:
        return json.loads(resp.read())


class TestHttpEndpoints:
    @pytest.fixture
    def server(self, service):
        with ServiceServer(service, port=0) as srv:
            yield srv

    def test_full_http_round_trip(self, server):
        base = server.url
        batch = _get(f"{base}/runs/next?annotator=alice&session=s1")
        assert batch["session_cap"] == 160
        run_id = batch["runs"][0]["run_id"]

        view = _get(f"{base}/runs/{run_id}")
        assert view["run_id"] == run_id
        assert view["steps"] == len(view["tcp"])
        assert view["media_url"] is None
        assert "target" in view["objects"]

        second_id = batch["runs"][1]["run_id"]
        ack = _post(f"{base}/labels",
                    {"run_id": run_id, "annotator_id": "alice", "label": "high",
                     "session_id": "s1"})
        assert ack["status"] == "ok"
        for annotator, labels in (("alice", [None, "low"]), ("bob", ["high", "low"])):
            for rid, label in zip((run_id, second_id), labels):
                if label is not None:
                    _post(f"{base}/labels",
                          {"run_id": rid, "annotator_id": annotator, "label": label,
                           "session_id": "s1"})

        agreement = _get(f"{base}/agreement?a=alice&b=bob")
        assert agreement["kappa"] == 1.0
        assert agreement["n_items"] == 2

        export = _get(f"{base}/export")
        assert len(export["labels"]) == 4
        assert export["resolutions"][run_id]["label"] == "high"
        assert export["resolutions"][second_id]["label"] == "low"

    def test_http_errors(self, server):
        base = server.url
        with pytest.raises(urllib.error.HTTPError) as err:
            _get(f"{base}/runs/ghost")
        assert err.value.code == 404
        with pytest.raises(urllib.error.HTTPError) as err:
            _post(f"{base}/labels", {"run_id": "ghost", "annotator_id": "a", "label": "high"})
        assert err.value.code == 404
        with pytest.raises(urllib.error.HTTPError) as err:
            _get(f"{base}/agreement?a=x&b=y")
        assert err.value.code == 409

    def test_export_conflict_lists_unresolved(self, server):
        base = server.url
        run_id = _get(f"{base}/runs/next?annotator=a&session=s")["runs"][0]["run_id"]
        _post(f"{base}/labels", {"run_id": run_id, "annotator_id": "a", "label": "high"})
        _post(f"{base}/labels", {"run_id": run_id, "annotator_id": "b", "label": "low"})
        with pytest.raises(urllib.error.HTTPError) as err:
            _get(f"{base}/export")
        assert err.value.code == 409
        body = json.loads(err.value.read())
        assert body["unresolved"] == [run_id]
        partial = _get(f"{base}/export?partial=1")
        assert partial["unresolved"] == [run_id]

    def test_csv_export(self, server):
        base = server.url
        run_id = _get(f"{base}/runs/next?annotator=a&session=s")["runs"][0]["run_id"]
        _post(f"{base}/labels", {"run_id": run_id, "annotator_id": "a", "label": "medium"})
        with urllib.request.urlopen(f"{base}/export?format=csv&file=labels") as resp:
            text = resp.read().decode()
        assert text.splitlines()[0] == "run_id,annotator_id,label,timestamp,session_id"
        assert run_id in text


def test_run_index_from_dir(tmp_path):
    for trace in _traces(2, 1):
        write_trace(trace, tmp_path / f"{trace.header.run_id}.jsonl")
    index = RunIndex.from_dir(tmp_path)
    assert len(index.runs) == 3
    assert len(index.successful_ids()) == 2
