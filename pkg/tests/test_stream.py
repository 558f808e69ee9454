import json
import threading
import time

import pytest

from edgebot import artifact as A
from edgebot import forest, ingest, preprocess, stream, synth


@pytest.fixture(scope="module")
def loaded_artifact():
    records = synth.synthetic_records(900, seed=6)
    prep = preprocess.prepare(records, seed=2)
    model = forest.train_forest(prep.split.train,
                                forest.ForestParams(n_estimators=10), seed=0)
    blob = A.serialize_model(
        model,
        encoding=prep.encoding,
        scaler=prep.scaler,
        feature_names=list(prep.split.train.feature_names),
        feature_kinds=list(prep.split.train.feature_kinds),
        seed=2,
    )
    return A.deserialize(blob)


def _log_lines(n, seed=0, malformed_every=0):
    records = synth.synthetic_records(n, seed=seed, duplicate_rate=0.0)[:n]
    text = ingest.format_conn_log(records)
    lines = text.splitlines(keepends=True)
    header = [l for l in lines if l.startswith("#")]
    data = [l for l in lines if not l.startswith("#")]
    if malformed_every:
        for i in range(0, len(data), malformed_every):
            data[i] = "garbage\tline\n"
    return header + data, len(data)


class TestClassifyStream:
    def test_empty_stream_clean_shutdown(self, loaded_artifact):
        header, _ = _log_lines(1)
        out = []
        stats = stream.classify_stream(loaded_artifact, header[:-1], out.append)
        assert out == []
        assert stats.lines == 0

    def test_mixed_valid_and_malformed_order_preserved(self, loaded_artifact):
        lines, _ = _log_lines(3, seed=1)
        lines.insert(len(lines) - 1, "not\ta\tflow\n")  # malformed mid-stream
        out = []
        stats = stream.classify_stream(loaded_artifact, lines, out.append)
        assert stats.records == 3
        assert stats.errors == 1
        records = [json.loads(l) for l in out]
        assert [r["line"] for r in records] == sorted(r["line"] for r in records)
        assert sum(1 for r in records if "error" in r) == 1
        assert sum(1 for r in records if "verdict" in r) == 3

    def test_one_output_record_per_line(self, loaded_artifact):
        lines, n_data = _log_lines(2000, seed=2, malformed_every=20)
        out = []
        stats = stream.classify_stream(loaded_artifact, lines, out.append)
        assert len(out) == n_data == stats.emitted
        assert stats.errors == sum(1 for l in out if "error" in json.loads(l))

    def test_alerts_only_suppresses_benign_keeps_errors(self, loaded_artifact):
        lines, _ = _log_lines(200, seed=3, malformed_every=40)
        full = []
        stream.classify_stream(loaded_artifact, lines, full.append)
        alerts = []
        stats = stream.classify_stream(loaded_artifact, lines, alerts.append,
                                       mode=stream.MODE_ALERTS)
        parsed = [json.loads(l) for l in alerts]
        assert all("error" in r or r["verdict"] == "Attack" for r in parsed)
        n_attack_full = sum(
            1 for l in full if json.loads(l).get("verdict") == "Attack"
        )
        assert sum(1 for r in parsed if r.get("verdict") == "Attack") == n_attack_full

    def test_unlabeled_input_accepted(self, loaded_artifact):
        records = synth.synthetic_records(20, seed=4, duplicate_rate=0.0)
        unlabeled = [
            ingest.FlowRecord(**{**r.__dict__, "label": None, "detailed_label": ""})
            for r in records
        ]
        text = ingest.format_conn_log(unlabeled)
        # strip the label columns from header and lines entirely
        out = []
        stats = stream.classify_stream(loaded_artifact, text.splitlines(), out.append)
        assert stats.records == len(unlabeled)

    def test_alert_schema_stable(self, loaded_artifact):
        lines, _ = _log_lines(2, seed=5)
        out = []
        stream.classify_stream(loaded_artifact, lines, out.append)
        record = json.loads(out[0])
        assert set(record) == {"line", "ts", "verdict", "score", "model",
                               "src_port", "dst_port", "proto", "service",
                               "conn_state"}
        assert record["model"] == loaded_artifact.artifact_id
        assert "T" in record["ts"]  # ISO-8601

    def test_throughput_smoke(self, loaded_artifact):
        lines, n_data = _log_lines(12000, seed=7)
        out = []
        t0 = time.perf_counter()
        stream.classify_stream(loaded_artifact, lines, out.append)
        rate = n_data / (time.perf_counter() - t0)
        assert rate >= 10_000, f"single-threaded throughput {rate:.0f} flows/s"


class TestDaemon:
    @pytest.mark.parametrize("workers", [1, 3])
    def test_order_and_counts_match_sync_path(self, loaded_artifact, workers):
        lines, n_data = _log_lines(800, seed=8, malformed_every=30)
        sync_out = []
        stream.classify_stream(loaded_artifact, lines, sync_out.append)
        daemon_out = []
        stats = stream.run_daemon(loaded_artifact, iter(lines), daemon_out.append,
                                  workers=workers, queue_size=4, batch_size=64)
        assert len(daemon_out) == len(sync_out) == n_data
        for a, b in zip(daemon_out, sync_out):
            ra, rb = json.loads(a), json.loads(b)
            assert ra["line"] == rb["line"]
            assert ra.get("verdict") == rb.get("verdict")
        assert stats.emitted == n_data

    def test_follow_mode_stops_on_event(self, loaded_artifact, tmp_path):
        lines, n_data = _log_lines(50, seed=9)
        path = tmp_path / "conn.log"
        path.write_text("".join(lines), encoding="utf-8")
        out = []
        stop = threading.Event()
        result = {}

        def run():
            with open(path, "r", encoding="utf-8") as fh:
                result["stats"] = stream.run_daemon(
                    loaded_artifact, fh, out.append, follow=True, stop=stop,
                    batch_size=8,
                )

        t = threading.Thread(target=run)
        t.start()
        deadline = time.time() + 10
        while len(out) < n_data and time.time() < deadline:
            time.sleep(0.05)
        stop.set()
        t.join(timeout=10)
        assert not t.is_alive()
        assert len(out) == n_data
