"""Sliding observation windows over a linearized commit stream."""

from __future__ import annotations

import bisect
import logging
from dataclasses import dataclass, field

from .ingest import CommitRecord

log = logging.getLogger(__name__)

DAY = 86400


@dataclass(frozen=True)
class WindowSpec:
    window_days: int = 90
    step_days: int = 45
    t0: int | None = None

    def __post_init__(self):
        if self.window_days <= 0 or self.step_days <= 0:
            raise ValueError("window and step must be positive")
        if self.step_days > self.window_days:
            raise ValueError("step must not exceed the window size")

    @property
    def window_seconds(self) -> int:
        return int(self.window_days * DAY)

    @property
    def step_seconds(self) -> int:
        return int(self.step_days * DAY)

    def non_overlapping(self) -> "WindowSpec":
        return WindowSpec(self.window_days, self.window_days, self.t0)


@dataclass
class Window:
    index: int
    t_start: int
    t_end: int
    commits: list[CommitRecord] = field(default_factory=list)
    partial: bool = False

    @property
    def active(self) -> set:
        return {c.author for c in self.commits}


def make_windows(stream: list[CommitRecord], spec: WindowSpec = WindowSpec()) -> list[Window]:
    """Windows ``[t0 + n*step, t0 + n*step + window]``, both ends closed.

    Windows run from n = 0 to the last n whose start is not after the final
    commit. Empty windows are kept; windows reaching past the final commit are
    flagged ``partial``.
    """
    if not stream:
        return []
    times = [c.timestamp for c in stream]
    if any(b < a for a, b in zip(times, times[1:])):
        raise ValueError("commit stream must be sorted by timestamp")
    t0 = times[0] if spec.t0 is None else spec.t0
    last = times[-1]
    step, width = spec.step_seconds, spec.window_seconds
    out = []
    n = 0
    while t0 + n * step <= last:
        start = t0 + n * step
        end = start + width
        lo = bisect.bisect_left(times, start)
        hi = bisect.bisect_right(times, end)
        out.append(Window(n, start, end, stream[lo:hi], partial=end > last))
        n += 1
    return out


def window_corpus(window: Window) -> dict:
    """Artifact -> text, taking the latest text seen inside the window."""
    texts = {}
    for c in window.commits:
        for a in c.touched:
            t = c.artifact_texts.get(a)
            if t is not None or a not in texts:
                texts[a] = t
    return texts


def _network_for_window(window: Window, coupling_config):
    from .coupling import CouplingConfig, semantic_coupling
    from .network import DeveloperNetwork, build_contrib, build_network

    meta = dict(t_start=window.t_start, t_end=window.t_end, partial=window.partial)
    if not window.commits:
        return DeveloperNetwork.empty(window.index, **meta)
    contrib = build_contrib(window.commits)
    texts = window_corpus(window)
    coupling = semantic_coupling(contrib.artifacts, texts, coupling_config or CouplingConfig())
    return build_network(contrib, coupling, window.index, **meta)


def _safe_network(args):
    window, coupling_config = args
    from .network import DeveloperNetwork

    try:
        return _network_for_window(window, coupling_config)
    except Exception as e:  # noqa: BLE001 - one bad window must not stop the stream
        log.error("window %d failed: %s", window.index, e)
        return DeveloperNetwork.empty(window.index, window.t_start, window.t_end, window.partial,
                                      error=f"{type(e).__name__}: {e}")


def stream_networks(windows: list[Window], coupling_config=None, workers: int = 1):
    """One network per window, ordered by window index.

    Empty windows give a 0-node network; a failing window gives an empty
    network with ``error`` set.
    """
    jobs = [(w, coupling_config) for w in windows]
    if workers > 1 and len(jobs) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_safe_network, jobs))
    return [_safe_network(j) for j in jobs]
