"""Ingestion of Zeek-style connection logs and CSV exports into flow records.

The parser honors Zeek TSV directives (``#separator``, ``#fields``,
``#types``, ``#empty_field``, ``#unset_field``) and tolerates the common
labeled-capture quirk where the trailing ``label detailed-label`` pair is
glued to the last tab-separated cell with plain spaces.
"""

from __future__ import annotations

import codecs
import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional

import numpy as np

from .errors import (
    FieldCountMismatch,
    InsufficientClassSamples,
    MissingHeader,
    UnbalancedQuote,
    UnparsableValue,
)

BENIGN = "Benign"
ATTACK = "Attack"

# Zeek column names for the modeled features (Table-1-style schema).
ZEEK_FIELD_MAP = {
    "id.orig_p": "src_port",
    "id.resp_p": "dst_port",
    "proto": "proto",
    "service": "service",
    "duration": "duration",
    "orig_bytes": "orig_bytes",
    "resp_bytes": "resp_bytes",
    "conn_state": "conn_state",
    "history": "history",
    "orig_pkts": "orig_pkts",
    "orig_ip_bytes": "orig_ip_bytes",
    "resp_pkts": "resp_pkts",
    "resp_ip_bytes": "resp_ip_bytes",
}

# Alternate spellings accepted in CSV exports.
CSV_ALIASES = {
    "src_port": "src_port",
    "dst_port": "dst_port",
    "srcport": "src_port",
    "dstport": "dst_port",
    "detailed-label": "detailed_label",
    "detailed_label": "detailed_label",
    "label": "label",
}

CANONICAL_FIELDS = (
    "src_port",
    "dst_port",
    "proto",
    "service",
    "duration",
    "orig_bytes",
    "resp_bytes",
    "conn_state",
    "history",
    "orig_pkts",
    "orig_ip_bytes",
    "resp_pkts",
    "resp_ip_bytes",
)

_INT_FIELDS = {
    "src_port",
    "dst_port",
    "orig_bytes",
    "resp_bytes",
    "orig_pkts",
    "orig_ip_bytes",
    "resp_pkts",
    "resp_ip_bytes",
}
_OPTIONAL_FIELDS = {"duration", "orig_bytes", "resp_bytes"}


@dataclass(frozen=True)
class FlowRecord:
    """One parsed network connection; the 13 modeled features plus label."""

    src_port: int
    dst_port: int
    proto: str
    service: Optional[str]
    duration: Optional[float]
    orig_bytes: Optional[int]
    resp_bytes: Optional[int]
    conn_state: Optional[str]
    history: Optional[str]  # "" is the empty category, None is missing
    orig_pkts: int
    orig_ip_bytes: int
    resp_pkts: int
    resp_ip_bytes: int
    label: Optional[str] = None  # Benign / Attack / None for unlabeled streams
    detailed_label: str = ""

    def __post_init__(self):
        for port in (self.src_port, self.dst_port):
            if not 0 <= port <= 65535:
                raise ValueError(f"port {port} outside [0, 65535]")
        for name in ("orig_pkts", "orig_ip_bytes", "resp_pkts", "resp_ip_bytes"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        for name in ("duration", "orig_bytes", "resp_bytes"):
            value = getattr(self, name)
            if value is not None and value < 0:
                raise ValueError(f"{name} must be non-negative when present")
        if self.label is not None and self.label not in (BENIGN, ATTACK):
            raise ValueError(f"label must be {BENIGN!r} or {ATTACK!r}, got {self.label!r}")

    def feature_key(self):
        """The 13 features plus label; detailed_label never participates."""
        return tuple(getattr(self, f) for f in CANONICAL_FIELDS) + (self.label,)


@dataclass
class RawTable:
    """Uniform-arity string table with source info for error reporting."""

    columns: list[str]
    rows: list[list[str]]
    source: str = "<memory>"
    row_lines: Optional[list[int]] = None

    def __post_init__(self):
        for i, row in enumerate(self.rows):
            if len(row) != len(self.columns):
                line = self.row_lines[i] if self.row_lines else i + 1
                raise FieldCountMismatch(line, len(self.columns), len(row))


def _map_label(cell: Optional[str]) -> Optional[str]:
    if cell is None:
        return None
    text = cell.strip().lower()
    if text in ("", "-", "(empty)"):
        return None
    return BENIGN if text == "benign" else ATTACK


def _clean_detail(cell: Optional[str]) -> str:
    if cell is None or cell.strip() in ("-", "(empty)"):
        return ""
    return cell.strip()


class ZeekConnParser:
    """Incremental parser for Zeek conn.log text, one line at a time.

    Directive lines update parser state and yield no record; data lines
    yield one FlowRecord each. Unlabeled logs are permitted (label None).
    """

    def __init__(self):
        self.separator = "\t"
        self.unset = "-"
        self.empty = "(empty)"
        self.fields: Optional[list[str]] = None

    def feed(self, line: str, line_no: int) -> Optional[FlowRecord]:
        line = line.rstrip("\r\n")
        if not line:
            return None
        if line.startswith("#"):
            self._directive(line)
            return None
        if self.fields is None:
            raise MissingHeader(f"line {line_no}: data before any #fields directive")
        return self._data_line(line, line_no)

    def _directive(self, line: str) -> None:
        if line.startswith("#separator"):
            raw = line.split(" ", 1)[1] if " " in line else "\\x09"
            self.separator = codecs.decode(raw.strip(), "unicode_escape")
            return
        parts = line.split(self.separator)
        name = parts[0]
        if name == "#fields":
            self.fields = parts[1:]
        elif name == "#unset_field" and len(parts) > 1:
            self.unset = parts[1]
        elif name == "#empty_field" and len(parts) > 1:
            self.empty = parts[1]
        # #types, #path, #open, #close, #set_separator: nothing to do

    def _data_line(self, line: str, line_no: int) -> FlowRecord:
        cells = line.split(self.separator)
        names = list(self.fields)
        if len(cells) != len(names):
            # Labeled IoT captures often pack "last-field label detailed-label"
            # into one trailing cell separated by spaces.
            tokens = cells[-1].split()
            expanded = None
            if len(cells) == len(names) - 2 and len(tokens) >= 3:
                expanded = cells[:-1] + [" ".join(tokens[:-2]), tokens[-2], tokens[-1]]
            if expanded is None:
                raise FieldCountMismatch(line_no, len(names), len(cells))
            cells = expanded
        else:
            # Same quirk on headers that do not declare the label columns.
            if "label" not in names:
                tokens = cells[-1].split()
                if len(tokens) >= 3:
                    cells = cells[:-1] + [" ".join(tokens[:-2]), tokens[-2], tokens[-1]]
                    names = names + ["label", "detailed-label"]
                elif len(tokens) == 2:
                    cells = cells[:-1] + [tokens[0], tokens[1]]
                    names = names + ["label"]
        row = dict(zip(names, cells))
        return self._build(row, line_no)

    def _missing(self, cell: Optional[str]) -> bool:
        return cell is None or cell == self.unset

    def _build(self, row: dict[str, str], line_no: int) -> FlowRecord:
        values: dict[str, object] = {}
        for zeek_name, name in ZEEK_FIELD_MAP.items():
            cell = row.get(zeek_name)
            if name in _INT_FIELDS:
                if self._missing(cell):
                    if name in _OPTIONAL_FIELDS:
                        values[name] = None
                        continue
                    raise UnparsableValue(zeek_name, line_no, cell)
                try:
                    values[name] = int(cell)
                except ValueError:
                    raise UnparsableValue(zeek_name, line_no, cell) from None
            elif name == "duration":
                if self._missing(cell):
                    values[name] = None
                else:
                    try:
                        values[name] = float(cell)
                    except ValueError:
                        raise UnparsableValue(zeek_name, line_no, cell) from None
            elif name == "history":
                if self._missing(cell):
                    values[name] = None
                elif cell == self.empty:
                    values[name] = ""
                else:
                    values[name] = cell
            elif name == "proto":
                if self._missing(cell):
                    raise UnparsableValue(zeek_name, line_no, cell)
                values[name] = cell.lower()
            else:  # service, conn_state
                values[name] = None if self._missing(cell) or cell == self.empty else cell
        try:
            return FlowRecord(
                label=_map_label(row.get("label")),
                detailed_label=_clean_detail(row.get("detailed-label")),
                **values,
            )
        except ValueError as exc:
            raise UnparsableValue("<record>", line_no, str(exc)) from None


def parse_conn_log(data) -> list[FlowRecord]:
    """Parse Zeek conn.log text (str, bytes, or line iterable) into records."""
    parser = ZeekConnParser()
    records = []
    for line_no, line in enumerate(_iter_lines(data), start=1):
        record = parser.feed(line, line_no)
        if record is not None:
            records.append(record)
    return records


def _iter_lines(data) -> Iterator[str]:
    if isinstance(data, bytes):
        data = data.decode("utf-8", errors="replace")
    if isinstance(data, str):
        yield from data.splitlines()
    else:
        for line in data:
            if isinstance(line, bytes):
                line = line.decode("utf-8", errors="replace")
            yield line


def format_conn_log(records: Iterable[FlowRecord]) -> str:
    """Serialize records back to a canonical labeled conn.log.

    Round-trips through parse_conn_log: numbers use shortest repr, missing
    values the `-` sentinel, empty history the `(empty)` sentinel.
    """
    header_fields = [
        "id.orig_p", "id.resp_p", "proto", "service", "duration",
        "orig_bytes", "resp_bytes", "conn_state", "history", "orig_pkts",
        "orig_ip_bytes", "resp_pkts", "resp_ip_bytes", "label", "detailed-label",
    ]
    lines = [
        "#separator \\x09",
        "#set_separator\t,",
        "#empty_field\t(empty)",
        "#unset_field\t-",
        "#path\tconn",
        "#fields\t" + "\t".join(header_fields),
    ]
    for rec in records:
        cells = []
        for name in CANONICAL_FIELDS:
            value = getattr(rec, name)
            if value is None:
                cells.append("-")
            elif name == "history" and value == "":
                cells.append("(empty)")
            elif isinstance(value, float):
                cells.append(repr(value))
            else:
                cells.append(str(value))
        cells.append(rec.label if rec.label is not None else "-")
        cells.append(rec.detailed_label if rec.detailed_label else "-")
        lines.append("\t".join(cells))
    return "\n".join(lines) + "\n"


def parse_csv(data, has_header: bool = True, source: str = "<memory>") -> RawTable:
    """RFC-style CSV: comma separator, double-quote quoting, `""` escape."""
    if isinstance(data, bytes):
        data = data.decode("utf-8", errors="replace")
    rows: list[list[str]] = []
    row_lines: list[int] = []
    cell: list[str] = []
    row: list[str] = []
    line_no = 1
    row_start = 1
    state = "plain"  # plain | quoted | quote_seen
    i, n = 0, len(data)
    while i < n:
        ch = data[i]
        if state == "quoted":
            if ch == '"':
                state = "quote_seen"
            else:
                if ch == "\n":
                    line_no += 1
                cell.append(ch)
            i += 1
            continue
        if state == "quote_seen":
            if ch == '"':
                cell.append('"')
                state = "quoted"
                i += 1
                continue
            state = "plain"
            # fall through: delimiter handling below
        if ch == '"' and not cell:
            state = "quoted"
            i += 1
        elif ch == ",":
            row.append("".join(cell))
            cell = []
            i += 1
        elif ch == "\n" or ch == "\r":
            if ch == "\r" and i + 1 < n and data[i + 1] == "\n":
                i += 1
            row.append("".join(cell))
            cell = []
            if any(c != "" for c in row) or len(row) > 1:
                rows.append(row)
                row_lines.append(row_start)
            row = []
            line_no += 1
            row_start = line_no
            i += 1
        else:
            cell.append(ch)
            i += 1
    if state == "quoted":
        raise UnbalancedQuote(line_no)
    if cell or row:
        row.append("".join(cell))
        if any(c != "" for c in row) or len(row) > 1:
            rows.append(row)
            row_lines.append(row_start)

    if not rows:
        return RawTable(columns=[], rows=[], source=source, row_lines=[])
    if has_header:
        columns = rows[0]
        body = rows[1:]
        body_lines = row_lines[1:]
    else:
        columns = [f"col{i}" for i in range(len(rows[0]))]
        body = rows
        body_lines = row_lines
    for line, r in zip(body_lines, body):
        if len(r) != len(columns):
            raise FieldCountMismatch(line, len(columns), len(r))
    return RawTable(columns=columns, rows=body, source=source, row_lines=body_lines)


def records_from_table(table: RawTable) -> list[FlowRecord]:
    """Build FlowRecords from a CSV export using Zeek or canonical column names."""
    mapping = {}
    for idx, col in enumerate(table.columns):
        key = col.strip()
        name = ZEEK_FIELD_MAP.get(key) or CSV_ALIASES.get(key.lower()) or (
            key if key in CANONICAL_FIELDS else None
        )
        if name is not None:
            mapping[name] = idx
    missing = [f for f in CANONICAL_FIELDS if f not in mapping and f not in _OPTIONAL_FIELDS
               and f not in ("service", "conn_state", "history")]
    if missing:
        raise UnparsableValue(",".join(missing), 0, "required columns absent")

    records = []
    for i, row in enumerate(table.rows):
        line_no = table.row_lines[i] if table.row_lines else i + 1
        values: dict[str, object] = {}
        for name in CANONICAL_FIELDS:
            cell = row[mapping[name]].strip() if name in mapping else ""
            absent = cell in ("", "-")
            if name in _INT_FIELDS:
                if absent:
                    if name in _OPTIONAL_FIELDS:
                        values[name] = None
                        continue
                    raise UnparsableValue(name, line_no, cell)
                try:
                    values[name] = int(float(cell)) if "." in cell else int(cell)
                except ValueError:
                    raise UnparsableValue(name, line_no, cell) from None
            elif name == "duration":
                if absent:
                    values[name] = None
                else:
                    try:
                        values[name] = float(cell)
                    except ValueError:
                        raise UnparsableValue(name, line_no, cell) from None
            elif name == "proto":
                if absent:
                    raise UnparsableValue(name, line_no, cell)
                values[name] = cell.lower()
            elif name == "history":
                if cell == "(empty)":
                    values[name] = ""
                elif absent:
                    values[name] = None
                else:
                    values[name] = cell
            else:
                values[name] = None if absent or cell == "(empty)" else cell
        label_cell = row[mapping["label"]] if "label" in mapping else None
        detail_cell = row[mapping["detailed_label"]] if "detailed_label" in mapping else None
        try:
            records.append(FlowRecord(
                label=_map_label(label_cell),
                detailed_label=_clean_detail(detail_cell),
                **values,
            ))
        except ValueError as exc:
            raise UnparsableValue("<record>", line_no, str(exc)) from None
    return records


def records_to_table(records: Iterable[FlowRecord]) -> RawTable:
    """Canonical CSV view of records (all 13 features + labels)."""
    columns = list(CANONICAL_FIELDS) + ["label", "detailed_label"]
    rows = []
    for rec in records:
        row = []
        for name in CANONICAL_FIELDS:
            value = getattr(rec, name)
            if value is None:
                row.append("-")
            elif name == "history" and value == "":
                row.append("(empty)")
            elif isinstance(value, float):
                row.append(repr(value))
            else:
                row.append(str(value))
        row.append(rec.label if rec.label is not None else "-")
        row.append(rec.detailed_label if rec.detailed_label else "-")
        rows.append(row)
    return RawTable(columns=columns, rows=rows)


def write_csv(table: RawTable, path) -> None:
    def quote(cell: str) -> str:
        if any(c in cell for c in ',"\n'):
            return '"' + cell.replace('"', '""') + '"'
        return cell

    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(quote(c) for c in table.columns) + "\n")
        for row in table.rows:
            fh.write(",".join(quote(c) for c in row) + "\n")


def balance_subset(records, total: int, ratio: float, seed: int) -> list[FlowRecord]:
    """Uniform per-class sample without replacement, shuffled, seed-deterministic.

    The Attack share is total − floor(total·(1−ratio)), so integer rounding
    favors Attack by at most one row.
    """
    if not 0 < ratio < 1:
        raise ValueError(f"ratio must be in (0,1), got {ratio}")
    if total <= 0:
        raise ValueError(f"total must be positive, got {total}")
    n_benign = math.floor(total * (1.0 - ratio))
    n_attack = total - n_benign
    attack_idx = [i for i, r in enumerate(records) if r.label == ATTACK]
    benign_idx = [i for i, r in enumerate(records) if r.label == BENIGN]
    if len(attack_idx) < n_attack:
        raise InsufficientClassSamples(ATTACK, n_attack, len(attack_idx))
    if len(benign_idx) < n_benign:
        raise InsufficientClassSamples(BENIGN, n_benign, len(benign_idx))
    rng = np.random.default_rng(seed)
    chosen_attack = rng.choice(len(attack_idx), size=n_attack, replace=False)
    chosen_benign = rng.choice(len(benign_idx), size=n_benign, replace=False)
    chosen = [attack_idx[i] for i in chosen_attack] + [benign_idx[i] for i in chosen_benign]
    order = rng.permutation(len(chosen))
    return [records[chosen[i]] for i in order]
