"""Streaming flow classification against a loaded model artifact.

Lines come in Zeek conn.log form (directives update parser state, label
columns optional); every non-directive line produces exactly one output
record: an alert/verdict JSON line, or an inline error record for a
malformed line. Classification is micro-batched so per-flow cost stays at
vectorized-traversal levels.

The daemon variant wires a reader thread, a bounded work queue (blocking
the producer when full), N stateless workers sharing the immutable
artifact, and one writer that restores input order by sequence number.
"""

from __future__ import annotations

import heapq
import json
import queue
import threading
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Callable, Iterable, Optional

import numpy as np

from .artifact import LoadedArtifact
from .errors import FormatError
from .ingest import ATTACK, FlowRecord, ZeekConnParser
from .preprocess import assemble_row

MODE_FULL = "full"
MODE_ALERTS = "alerts"


@dataclass
class StreamStats:
    lines: int = 0  # non-directive input lines
    records: int = 0  # successfully classified flows
    alerts: int = 0  # Attack verdicts
    errors: int = 0  # malformed lines
    emitted: int = 0  # output records written

    def to_dict(self) -> dict:
        return {
            "lines": self.lines,
            "records": self.records,
            "alerts": self.alerts,
            "errors": self.errors,
            "emitted": self.emitted,
        }


def _now_iso() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="milliseconds")


def _alert_record(line_no: int, record: FlowRecord, verdict: str, score: float,
                  model_id: str) -> dict:
    return {
        "line": line_no,
        "ts": _now_iso(),
        "verdict": verdict,
        "score": round(float(score), 6),
        "model": model_id,
        "src_port": record.src_port,
        "dst_port": record.dst_port,
        "proto": record.proto,
        "service": record.service,
        "conn_state": record.conn_state,
    }


def _error_record(line_no: int, message: str, model_id: str) -> dict:
    return {"line": line_no, "ts": _now_iso(), "error": message, "model": model_id}


class _Classifier:
    """Shared, read-only classification core over a loaded artifact."""

    def __init__(self, artifact: LoadedArtifact):
        if artifact.encoding is None:
            from .errors import ArtifactError

            raise ArtifactError("artifact has no preprocessing; cannot classify flows")
        self.artifact = artifact
        self.parser_factory = ZeekConnParser

    def classify_batch(self, items: list[tuple[int, FlowRecord]]) -> list[dict]:
        if not items:
            return []
        art = self.artifact
        rows = np.vstack([assemble_row(rec, art.encoding) for _, rec in items])
        classes, scores = art.predict_full_matrix(art._scale_rows(rows))
        out = []
        for (line_no, rec), cls, score in zip(items, classes, scores):
            verdict = ATTACK if cls == 1 else "Benign"
            out.append(_alert_record(line_no, rec, verdict, score, art.artifact_id))
        return out


def classify_stream(
    artifact: LoadedArtifact,
    lines: Iterable[str],
    sink: Callable[[str], None],
    mode: str = MODE_FULL,
    batch_size: int = 512,
) -> StreamStats:
    """Classify a line stream synchronously, order preserved.

    `sink` receives one JSON line per non-directive input line (alert-only
    mode suppresses Benign verdicts but still surfaces error records).
    """
    if mode not in (MODE_FULL, MODE_ALERTS):
        raise ValueError(f"mode must be {MODE_FULL!r} or {MODE_ALERTS!r}")
    clf = _Classifier(artifact)
    parser = ZeekConnParser()
    stats = StreamStats()
    pending: list[tuple[int, str, object]] = []  # (line_no, kind, payload)
    batch: list[tuple[int, FlowRecord]] = []

    def flush() -> None:
        classified = clf.classify_batch(batch)
        by_line = {r["line"]: r for r in classified}
        for line_no, kind, payload in pending:
            if kind == "err":
                record = _error_record(line_no, payload, clf.artifact.artifact_id)
            else:
                record = by_line[line_no]
                stats.records += 1
                if record["verdict"] == ATTACK:
                    stats.alerts += 1
                elif mode == MODE_ALERTS:
                    continue
            stats.emitted += 1
            sink(json.dumps(record, sort_keys=True) + "\n")
        pending.clear()
        batch.clear()

    line_no = 0
    for raw in lines:
        line_no += 1
        if isinstance(raw, bytes):
            raw = raw.decode("utf-8", errors="replace")
        stripped = raw.rstrip("\r\n")
        if not stripped:
            continue
        if stripped.startswith("#"):
            parser.feed(stripped, line_no)
            continue
        stats.lines += 1
        try:
            record = parser.feed(stripped, line_no)
        except FormatError as exc:
            stats.errors += 1
            pending.append((line_no, "err", str(exc)))
        else:
            pending.append((line_no, "rec", record))
            batch.append((line_no, record))
        if len(batch) >= batch_size or (pending and len(pending) >= 4 * batch_size):
            flush()
    flush()
    return stats


def _iter_follow(fh, stop: threading.Event, poll_s: float = 0.2):
    """Yield lines as they appear; at EOF poll until stopped."""
    while True:
        line = fh.readline()
        if line:
            yield line
            continue
        if stop.is_set():
            return
        time.sleep(poll_s)


@dataclass
class DaemonResult:
    stats: StreamStats = field(default_factory=StreamStats)
    fatal: Optional[BaseException] = None


def run_daemon(
    artifact: LoadedArtifact,
    input_fh,
    sink: Callable[[str], None],
    mode: str = MODE_FULL,
    workers: int = 1,
    queue_size: int = 64,
    batch_size: int = 512,
    follow: bool = False,
    stop: Optional[threading.Event] = None,
) -> StreamStats:
    """Bounded-queue pipeline: reader -> workers -> ordered writer.

    The in-flight queue blocks the reader when workers fall behind; the
    writer reorders finished batches by sequence number so output order
    always matches input order. Safe to stop via the shared event.
    """
    if stop is None:
        stop = threading.Event()
    clf = _Classifier(artifact)
    parser = ZeekConnParser()
    stats = StreamStats()
    work_q: queue.Queue = queue.Queue(maxsize=max(1, queue_size))
    out_q: queue.Queue = queue.Queue()
    n_workers = max(1, workers)
    result = DaemonResult(stats=stats)

    def reader() -> None:
        seq = 0
        line_no = 0
        batch: list[tuple[int, str, object]] = []
        try:
            source = _iter_follow(input_fh, stop) if follow else input_fh
            for raw in source:
                if stop.is_set() and not follow:
                    break
                line_no += 1
                if isinstance(raw, bytes):
                    raw = raw.decode("utf-8", errors="replace")
                stripped = raw.rstrip("\r\n")
                if not stripped:
                    continue
                if stripped.startswith("#"):
                    # Parser state is shared by reference; directives are
                    # applied here, before any later line is enqueued.
                    parser.feed(stripped, line_no)
                    continue
                stats.lines += 1
                try:
                    record = parser.feed(stripped, line_no)
                    batch.append((line_no, "rec", record))
                except FormatError as exc:
                    stats.errors += 1
                    batch.append((line_no, "err", str(exc)))
                if len(batch) >= batch_size:
                    work_q.put((seq, batch))  # blocks when queue is full
                    seq += 1
                    batch = []
            if batch:
                work_q.put((seq, batch))
                seq += 1
        finally:
            for _ in range(n_workers):
                work_q.put(None)

    def worker() -> None:
        while True:
            task = work_q.get()
            if task is None:
                out_q.put(None)
                return
            seq, batch = task
            try:
                classified = clf.classify_batch(
                    [(ln, rec) for ln, kind, rec in batch if kind == "rec"]
                )
                by_line = {r["line"]: r for r in classified}
                lines_out = []
                n_records = 0
                n_alerts = 0
                for line_no, kind, payload in batch:
                    if kind == "err":
                        record = _error_record(line_no, payload, clf.artifact.artifact_id)
                    else:
                        record = by_line[line_no]
                        n_records += 1
                        if record["verdict"] == ATTACK:
                            n_alerts += 1
                        elif mode == MODE_ALERTS:
                            continue
                    lines_out.append(json.dumps(record, sort_keys=True) + "\n")
                out_q.put((seq, lines_out, n_records, n_alerts))
            except BaseException as exc:  # noqa: BLE001 - surfaced as fatal
                result.fatal = exc
                stop.set()
                out_q.put(None)
                return

    threads = [threading.Thread(target=reader, daemon=True)]
    threads += [threading.Thread(target=worker, daemon=True) for _ in range(n_workers)]
    for t in threads:
        t.start()

    finished_workers = 0
    next_seq = 0
    backlog: list[tuple[int, list[str], int, int]] = []

    def drain(entry) -> None:
        _, lines_out, n_records, n_alerts = entry
        stats.records += n_records
        stats.alerts += n_alerts
        for text in lines_out:
            sink(text)
            stats.emitted += 1

    while finished_workers < n_workers:
        item = out_q.get()
        if item is None:
            finished_workers += 1
            continue
        heapq.heappush(backlog, item)
        while backlog and backlog[0][0] == next_seq:
            drain(heapq.heappop(backlog))
            next_seq += 1
    while backlog:
        drain(heapq.heappop(backlog))
    for t in threads:
        t.join(timeout=5.0)
    if result.fatal is not None:
        raise result.fatal
    return stats
