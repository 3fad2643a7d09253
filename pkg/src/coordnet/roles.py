"""Developer roles per window and their Markov transition chain."""

from __future__ import annotations

import csv
import enum
import itertools
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .netstats import CORE_QUANTILE, percentile_threshold


class State(str, enum.Enum):
    CORE = "core"
    PERIPHERAL = "peripheral"
    ISOLATED = "isolated"
    ABSENT = "absent"

    def __str__(self):
        return self.value


STATES = [State.CORE, State.PERIPHERAL, State.ISOLATED, State.ABSENT]


class MarkovError(ValueError):
    pass


def classify(network, active: Iterable, known: Iterable = (), basis: str = "nonzero",
             q: float = CORE_QUANTILE) -> dict:
    """Assign each known or active developer one state for this window.

    Core means degree at or above the 0.8 quantile (linear interpolation) of
    the degrees of active developers; with ``basis="nonzero"`` the quantile is
    taken over non-zero degrees only.
    """
    active = set(active)
    index = {d: i for i, d in enumerate(getattr(network, "developers", []))}
    extra = set(index) - active
    if extra:
        raise ValueError(f"{len(extra)} network nodes are not active developers")
    deg_all = network.degrees() if index else np.zeros(0, dtype=np.int64)
    deg = {d: int(deg_all[index[d]]) if d in index else 0 for d in active}
    if basis not in ("nonzero", "all"):
        raise ValueError(f"unknown percentile basis {basis!r}")
    thr = percentile_threshold(list(deg.values()), q, nonzero_only=(basis == "nonzero"))
    out = {}
    for d in active:
        k = deg[d]
        if k == 0:
            out[d] = State.ISOLATED
        elif thr is not None and k >= thr:
            out[d] = State.CORE
        else:
            out[d] = State.PERIPHERAL
    for d in known:
        if d not in active:
            out[d] = State.ABSENT
    return out


@dataclass
class StateSequence:
    developer: object
    states: list
    start: int = 0  # first active window; earlier entries are not counted

    @property
    def observed(self) -> list:
        return self.states[self.start:]


def role_sequences(networks: Sequence, actives: Sequence[set], basis: str = "nonzero",
                   exclude: Callable | None = None) -> list[StateSequence]:
    """Classify every window in order and collect one sequence per developer.

    A developer joins the known set at their first active window; the states
    before that are padded with ``absent`` and excluded via ``start``.
    """
    n = len(networks)
    first: dict = {}
    per_window = []
    for w, (net, act) in enumerate(zip(networks, actives)):
        for d in sorted(act, key=lambda x: getattr(x, "canonical_key", str(x))):
            first.setdefault(d, w)
        per_window.append(classify(net, act, first.keys(), basis))
    seqs = []
    for d, w0 in sorted(first.items(), key=lambda kv: (kv[1], getattr(kv[0], "canonical_key", str(kv[0])))):
        if exclude is not None and exclude(d):
            continue
        states = [State.ABSENT] * w0 + [per_window[w][d] for w in range(w0, n)]
        seqs.append(StateSequence(d, states, w0))
    return seqs


@dataclass
class TransitionMatrix:
    order: int
    probs: np.ndarray
    counts: np.ndarray
    row_labels: list = field(default_factory=list)

    @property
    def col_labels(self) -> list:
        return [s.value for s in STATES]

    @property
    def observed(self) -> np.ndarray:
        return self.counts.sum(axis=1) > 0

    def prob(self, src, dst) -> float:
        key = src if isinstance(src, str) else "|".join(s.value for s in src)
        return float(self.probs[self.row_labels.index(str(key)), STATES.index(State(dst))])

    def _write(self, path, values, fmt):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\r\n")
            w.writerow(["from"] + self.col_labels)
            for label, row in zip(self.row_labels, values):
                w.writerow([label] + [fmt(v) for v in row])

    def write_csv(self, probs_path, counts_path):
        self._write(probs_path, self.probs, lambda v: format(float(v), ".6g"))
        self._write(counts_path, self.counts, lambda v: str(int(v)))


def _as_states(seq) -> list[State]:
    raw = seq.observed if isinstance(seq, StateSequence) else list(seq)
    return [s if isinstance(s, State) else State(str(s)) for s in raw]


def estimate_markov(seqs: Iterable, order: int = 1) -> TransitionMatrix:
    """Maximum-likelihood transition probabilities from observed counts.

    Rows that never occur are left all-zero (unobserved); no smoothing.
    """
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    if order == 1:
        rows = [(s,) for s in STATES]
    else:
        rows = list(itertools.product(STATES, STATES))
    row_index = {r: i for i, r in enumerate(rows)}
    col_index = {s: i for i, s in enumerate(STATES)}
    counts = np.zeros((len(rows), len(STATES)), dtype=np.int64)
    for seq in seqs:
        states = _as_states(seq)
        for t in range(order, len(states)):
            counts[row_index[tuple(states[t - order:t])], col_index[states[t]]] += 1
    if counts.sum() == 0:
        raise MarkovError("no transitions observed")
    totals = counts.sum(axis=1, keepdims=True)
    probs = np.divide(counts, totals, out=np.zeros(counts.shape), where=totals > 0)
    labels = ["|".join(s.value for s in r) for r in rows]
    return TransitionMatrix(order, probs, counts, labels)


def leave_rates(tm: TransitionMatrix) -> dict:
    core = tm.prob("core", State.ABSENT) if tm.order == 1 else None
    peri = tm.prob("peripheral", State.ABSENT) if tm.order == 1 else None
    ratio = None
    if core is not None and peri is not None and core > 0:
        ratio = peri / core
    return {"core_leave": core, "peripheral_leave": peri, "leave_ratio": ratio}


def compare_window_modes(overlapping: Sequence, non_overlapping: Sequence, order: int = 1) -> dict:
    """Side-by-side chains for overlapping vs non-overlapping windows.

    Each mode reports its probability and count matrices and the core and
    peripheral probabilities of moving to ``absent``. A mode that cannot be
    estimated reports an ``error`` without hiding the other mode.
    """
    report = {}
    for name, seqs in (("overlapping", overlapping), ("non_overlapping", non_overlapping)):
        try:
            tm = estimate_markov(seqs, order)
        except MarkovError as e:
            report[name] = {"error": str(e)}
            continue
        entry = {
            "rows": tm.row_labels,
            "cols": tm.col_labels,
            "probs": tm.probs.tolist(),
            "counts": tm.counts.tolist(),
        }
        if order == 1:
            entry.update(leave_rates(tm))
        report[name] = entry
    return report
