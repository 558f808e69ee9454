"""Synthetic flow-like data for tests, demos, and the acceptance suite.

Two generators: `synthetic_dataset` emits a model-ready 15-feature matrix
with tunable class separation (plus a thin "greyzone" population near the
decision boundary so Gaussian corruption measurably hurts accuracy);
`synthetic_records` emits raw FlowRecords that exercise the full ingest ->
preprocess -> train pipeline, including missing values, duplicates, and a
few inconsistent rows.
"""

from __future__ import annotations

import numpy as np

from .ingest import ATTACK, BENIGN, FlowRecord
from .preprocess import KIND_BIT, KIND_NUMERIC, Dataset

DATASET_FEATURES = [
    ("src_port", KIND_NUMERIC),
    ("dst_port", KIND_NUMERIC),
    ("duration", KIND_NUMERIC),
    ("orig_bytes", KIND_NUMERIC),
    ("resp_bytes", KIND_NUMERIC),
    ("orig_pkts", KIND_NUMERIC),
    ("orig_ip_bytes", KIND_NUMERIC),
    ("resp_pkts", KIND_NUMERIC),
    ("resp_ip_bytes", KIND_NUMERIC),
    ("proto_bit1", KIND_BIT),
    ("proto_bit0", KIND_BIT),
    ("service_bit1", KIND_BIT),
    ("service_bit0", KIND_BIT),
    ("conn_state_bit1", KIND_BIT),
    ("conn_state_bit0", KIND_BIT),
]

# Numeric columns carrying class signal (the rest are pure noise).
_INFORMATIVE = [1, 2, 3, 5, 6]  # dst_port, duration, orig_bytes, orig_pkts, orig_ip_bytes


def synthetic_dataset(
    n: int = 20000,
    seed: int = 0,
    attack_fraction: float = 0.5,
    separation: float = 1.4,
    greyzone_fraction: float = 0.015,
    greyzone_margin: float = 0.08,
) -> Dataset:
    """Balanced separable 15-feature dataset in standardized units.

    Informative numerics sit at +-separation per class; a greyzone slice
    sits at +-greyzone_margin so sigma~0.1 noise flips a predictable share
    of rows. Bit columns carry weak class signal only.
    """
    rng = np.random.default_rng(seed)
    n_attack = int(round(n * attack_fraction))
    y = np.zeros(n, dtype=np.int64)
    y[:n_attack] = 1
    y = y[rng.permutation(n)]

    p = len(DATASET_FEATURES)
    X = rng.normal(0.0, 1.0, size=(n, p))

    sign = np.where(y == 1, 1.0, -1.0)
    for col in _INFORMATIVE:
        X[:, col] += sign * separation

    grey = rng.random(n) < greyzone_fraction
    for col in _INFORMATIVE:
        X[grey, col] = sign[grey] * greyzone_margin + rng.normal(
            0.0, 0.01, size=int(grey.sum())
        )

    # Weakly class-skewed categorical codes, positional-bit encoded.
    def encode_bits(codes: np.ndarray, hi_col: int, lo_col: int) -> None:
        X[:, hi_col] = (codes >> 1) & 1
        X[:, lo_col] = codes & 1

    proto_probs = np.where(y[:, None] == 1, [[0.7, 0.2, 0.1]], [[0.5, 0.3, 0.2]])
    cum = np.cumsum(proto_probs, axis=1)
    draws = rng.random((n, 1))
    proto_codes = 1 + (draws > cum[:, :1]).astype(np.int64) + (draws > cum[:, 1:2]).astype(np.int64)
    encode_bits(proto_codes.ravel(), 9, 10)

    service_codes = 1 + rng.integers(0, 3, size=n)
    encode_bits(service_codes, 11, 12)
    state_probs = np.where(y[:, None] == 1, [[0.6, 0.3, 0.1]], [[0.4, 0.3, 0.3]])
    cum = np.cumsum(state_probs, axis=1)
    draws = rng.random((n, 1))
    state_codes = 1 + (draws > cum[:, :1]).astype(np.int64) + (draws > cum[:, 1:2]).astype(np.int64)
    encode_bits(state_codes.ravel(), 13, 14)

    return Dataset(
        feature_names=[f for f, _ in DATASET_FEATURES],
        feature_kinds=[k for _, k in DATASET_FEATURES],
        values=X,
        labels=y,
        scaled=True,  # standardized units: noise sigma is a train-std fraction
    )


_BENIGN_PORTS = [80, 443, 53, 123, 8443, 993]
_ATTACK_PORTS = [23, 2323, 81, 8080, 5555]
_SERVICES = ["http", "dns", "ssl", None]
_HISTORIES = ["ShADadFf", "Dd", "S", "", None]


def synthetic_records(
    n: int = 2000,
    seed: int = 0,
    attack_fraction: float = 0.5,
    missing_rate: float = 0.04,
    duplicate_rate: float = 0.01,
    inconsistent_rate: float = 0.002,
    overlap: float = 0.05,
) -> list[FlowRecord]:
    """Raw labeled FlowRecords with realistic warts for pipeline tests.

    `overlap` is the fraction of rows whose port/state fingerprint mimics
    the opposite class; byte/packet volumes stay class-typical, so the
    data rewards models that combine several features.
    """
    rng = np.random.default_rng(seed)
    records: list[FlowRecord] = []
    n_attack = int(round(n * attack_fraction))
    labels = np.zeros(n, dtype=np.int64)
    labels[:n_attack] = 1
    labels = labels[rng.permutation(n)]
    for i in range(n):
        attack = labels[i] == 1
        disguised = rng.random() < overlap
        port_as_attack = attack != disguised
        if port_as_attack:
            dst_port = int(rng.choice(_ATTACK_PORTS))
            conn_state = str(rng.choice(["S0", "REJ", "S0", "OTH"]))
            history = str(rng.choice(["S", "Sr", "D"]))
            proto = str(rng.choice(["tcp", "tcp", "udp"]))
            service = None if rng.random() < 0.7 else "http"
        else:
            dst_port = int(rng.choice(_BENIGN_PORTS))
            conn_state = str(rng.choice(["SF", "SF", "S1", "RSTO"]))
            history = str(rng.choice(["ShADadFf", "Dd", "ShADadtFf", ""]))
            proto = str(rng.choice(["tcp", "udp", "udp", "icmp"]))
            service = str(rng.choice(["http", "dns", "ssl"]))
        if attack:
            duration = float(rng.exponential(0.4))
            orig_bytes = int(rng.integers(0, 400))
            resp_bytes = int(rng.integers(0, 200))
            orig_pkts = int(rng.integers(1, 8))
            resp_pkts = int(rng.integers(0, 6))
            detail = str(rng.choice(["C&C", "PartOfAHorizontalPortScan", "Okiru"]))
        else:
            duration = float(rng.exponential(8.0) + 0.05)
            orig_bytes = int(rng.integers(100, 40000))
            resp_bytes = int(rng.integers(80, 120000))
            orig_pkts = int(rng.integers(3, 80))
            resp_pkts = int(rng.integers(2, 120))
            detail = ""
        src_port = int(rng.integers(1024, 65536))
        orig_ip_bytes = orig_bytes + 40 * orig_pkts
        resp_ip_bytes = resp_bytes + 40 * resp_pkts
        if rng.random() < inconsistent_rate:
            orig_ip_bytes = max(0, orig_bytes - 10)  # violates byte accounting
        kwargs = dict(
            src_port=src_port,
            dst_port=dst_port,
            proto=proto,
            service=service,
            duration=duration,
            orig_bytes=orig_bytes,
            resp_bytes=resp_bytes,
            conn_state=conn_state,
            history=history,
            orig_pkts=orig_pkts,
            orig_ip_bytes=orig_ip_bytes,
            resp_pkts=resp_pkts,
            resp_ip_bytes=resp_ip_bytes,
            label=ATTACK if attack else BENIGN,
            detailed_label=detail,
        )
        if rng.random() < missing_rate:
            kwargs[str(rng.choice(["duration", "orig_bytes", "resp_bytes"]))] = None
        records.append(FlowRecord(**kwargs))
        if rng.random() < duplicate_rate:
            records.append(FlowRecord(**kwargs))
    return records
