"""Seeded reference generators used as oracles for the statistics.

Random graphs (Erdos-Renyi), preferential-attachment growth, the
deterministic hierarchical replication model, discrete power-law degree
samples and synthetic commit logs that follow a chosen role Markov chain.
"""

from __future__ import annotations

import string
from dataclasses import dataclass

import numpy as np
from scipy.special import zeta

from .ingest import ArtifactId, CommitRecord, DeveloperId
from .network import DeveloperNetwork
from .roles import STATES, State
from .windows import DAY

SCAFFOLD_DOMAIN = "scaffold.invalid"


def gen_er(n: int, p: float, seed: int = 0) -> DeveloperNetwork:
    """Every unordered pair joined independently with probability p."""
    if not 0 <= p <= 1:
        raise ValueError("p must lie in [0, 1]")
    if n < 1:
        raise ValueError("n must be positive")
    rng = np.random.default_rng(seed)
    iu, ju = np.triu_indices(n, 1)
    keep = rng.random(iu.size) < p
    return DeveloperNetwork.from_edges(n, np.column_stack([iu[keep], ju[keep]]))


def gen_pa(n: int, m: int, seed: int = 0) -> DeveloperNetwork:
    """Barabasi-Albert growth from a complete graph on m + 1 nodes."""
    if m < 1 or n <= m:
        raise ValueError("need m >= 1 and n > m")
    rng = np.random.default_rng(seed)
    edges = [(i, j) for i in range(m + 1) for j in range(i + 1, m + 1)]
    # every node appears once per incident edge end
    ends = np.empty(2 * (len(edges) + (n - m - 1) * m), dtype=np.int64)
    fill = 0
    for i, j in edges:
        ends[fill], ends[fill + 1] = i, j
        fill += 2
    for new in range(m + 1, n):
        targets: set[int] = set()
        while len(targets) < m:
            targets.add(int(ends[rng.integers(fill)]))
        for t in sorted(targets):
            edges.append((new, t))
            ends[fill], ends[fill + 1] = new, t
            fill += 2
    return DeveloperNetwork.from_edges(n, edges)


def hierarchical_edges(levels: int, motif: int = 5) -> tuple[int, list[tuple[int, int]]]:
    """Ravasz-Barabasi replication.

    Level 1 is a clique of ``motif`` nodes whose hub is node 0. Each further
    level adds ``motif - 1`` copies of the current graph and links the hub to
    every copy's outermost nodes (those that were peripheral at every level).
    """
    if levels < 1 or motif < 2:
        raise ValueError("need levels >= 1 and motif >= 2")
    n = motif
    edges = [(i, j) for i in range(motif) for j in range(i + 1, motif)]
    outer = list(range(1, motif))
    for _ in range(1, levels):
        new_edges = list(edges)
        new_outer = []
        for copy in range(1, motif):
            off = copy * n
            new_edges += [(a + off, b + off) for a, b in edges]
            shifted = [o + off for o in outer]
            new_edges += [(0, o) for o in shifted]
            new_outer += shifted
        edges, outer, n = new_edges, new_outer, n * motif
    return n, edges


def gen_hierarchical(levels: int, seed_motif_size: int = 5, seed: int = 0) -> DeveloperNetwork:
    """Deterministic hierarchical network; ``seed`` is accepted for a uniform interface."""
    n, edges = hierarchical_edges(levels, seed_motif_size)
    return DeveloperNetwork.from_edges(n, edges)


def gen_powerlaw_degrees(n: int, alpha: float, k_min: int, seed: int = 0) -> np.ndarray:
    """i.i.d. draws from p(k) = k**-alpha / zeta(alpha, k_min), k >= k_min.

    Each uniform r is inverted on the survival function zeta(alpha, x) /
    zeta(alpha, k_min) by doubling and bisection.
    """
    if alpha <= 1 or k_min < 1:
        raise ValueError("need alpha > 1 and k_min >= 1")
    rng = np.random.default_rng(seed)
    r = rng.random(n)
    z0 = zeta(alpha, k_min)
    # smallest x with S(x + 1) <= 1 - r, where S(x) = P(K >= x); doubling then
    # bisection, stopping where float64 no longer resolves integers
    target = 1.0 - r
    lo = np.full(n, float(k_min) - 1.0)  # S(lo + 1) > target
    hi = np.full(n, float(k_min))
    cap = 2.0 ** 53
    while True:
        grow = (zeta(alpha, hi + 1) / z0 > target) & (hi < cap)
        if not grow.any():
            break
        lo = np.where(grow, hi, lo)
        hi = np.where(grow, np.minimum(np.maximum(2 * hi, hi + 1), cap), hi)
    while True:
        mid = np.floor((lo + hi) / 2)
        active = (hi - lo > 1) & (mid > lo) & (mid < hi)
        if not active.any():
            break
        ok = zeta(alpha, mid + 1) / z0 <= target
        hi = np.where(active & ok, mid, hi)
        lo = np.where(active & ~ok, mid, lo)
    return hi.astype(np.int64)


def simulate_chain(chain, n_seqs: int, length: int, seed: int = 0, initial=None) -> np.ndarray:
    """State index sequences (n_seqs x length) drawn from a row-stochastic chain."""
    p = np.asarray(getattr(chain, "probs", chain), dtype=np.float64)
    if np.any(np.abs(p.sum(axis=1) - 1) > 1e-9):
        raise ValueError("chain rows must sum to 1")
    rng = np.random.default_rng(seed)
    k = p.shape[0]
    init = np.full(k, 1.0 / k) if initial is None else np.asarray(initial, dtype=np.float64)
    cum = np.cumsum(p, axis=1)
    out = np.empty((n_seqs, length), dtype=np.int64)
    out[:, 0] = rng.choice(k, size=n_seqs, p=init / init.sum())
    for t in range(1, length):
        r = rng.random(n_seqs)
        rows = cum[out[:, t - 1]]
        out[:, t] = np.minimum((r[:, None] >= rows).sum(axis=1), k - 1)
    return out


@dataclass
class SyntheticLog:
    records: list[CommitRecord]
    states: dict  # developer key -> list of intended State, one per window
    window_days: int
    t0: int


def _word(rng, length=9):
    return "".join(rng.choice(list(string.ascii_lowercase), size=length))


def _scaffold_count(n_core: int, n_peri: int) -> int:
    """Extra always-core nodes so the 80th-percentile rule sees the intended split."""
    if n_core == 0 and n_peri == 0:
        return 0
    s = 1 if n_peri else 0  # anchor for peripheral links
    while True:
        k = n_core + s
        nz = n_peri + k
        ok = k >= (3 if n_peri else 2) and (not n_peri or (nz >= 6 and int(np.floor(0.8 * (nz - 1))) >= n_peri))
        if ok:
            return s
        s += 1


def gen_markov_commit_log(chain, n_devs: int, n_windows: int, seed: int = 0,
                          window_days: int = 90, t0: int = 1_500_000_000,
                          initial=None) -> SyntheticLog:
    """Commit log whose per-window roles follow ``chain``.

    Analyze it with non-overlapping windows of ``window_days``. Every developer
    starts active (state drawn from ``initial`` over core/peripheral/isolated,
    uniform by default). Within a window, core developers and scaffold nodes
    share one artifact (a clique); each peripheral developer shares a private
    artifact with one scaffold anchor, giving degree 1; isolated developers
    work alone. Scaffold developers (domain ``scaffold.invalid``) are added
    only where needed for the percentile rule to place the intended developers
    and should be excluded from transition estimates.
    """
    rng = np.random.default_rng(seed)
    if initial is None:
        initial = [1, 1, 1, 0]
    seqs = simulate_chain(chain, n_devs, n_windows, seed=int(rng.integers(2**31)), initial=initial)
    width = window_days * DAY
    devs = [DeveloperId(f"dev{i:04d}@synth.example", f"Dev {i}") for i in range(n_devs)]
    records: list[CommitRecord] = []
    counter = 0

    def commit(dev, window, art, text, first=False):
        nonlocal counter
        ts = t0 if first else t0 + window * width + int(rng.integers(int(0.1 * width), int(0.9 * width)))
        records.append(CommitRecord(f"s{counter:07d}", dev, ts, frozenset([art]), {art: text}))
        counter += 1

    first_done = False
    for w in range(n_windows):
        col = seqs[:, w]
        core = [devs[i] for i in np.flatnonzero(col == STATES.index(State.CORE))]
        peri = [devs[i] for i in np.flatnonzero(col == STATES.index(State.PERIPHERAL))]
        iso = [devs[i] for i in np.flatnonzero(col == STATES.index(State.ISOLATED))]
        n_scaffold = _scaffold_count(len(core), len(peri))
        scaffold = [DeveloperId(f"w{w:03d}s{j:03d}@{SCAFFOLD_DOMAIN}", "scaffold") for j in range(n_scaffold)]
        hub = ArtifactId(f"w{w:03d}/core.c", "hub")
        hub_text = f"{_word(rng)} {_word(rng)}"
        for d in scaffold + core:
            commit(d, w, hub, hub_text, first=not first_done)
            first_done = True
        for j, d in enumerate(peri):
            art = ArtifactId(f"w{w:03d}/peripheral.c", f"p{j}")
            text = f"{_word(rng)} {_word(rng)}"
            commit(d, w, art, text, first=not first_done)
            first_done = True
            commit(scaffold[0], w, art, text)
        for j, d in enumerate(iso):
            art = ArtifactId(f"w{w:03d}/isolated.c", f"i{j}")
            commit(d, w, art, f"{_word(rng)} {_word(rng)}", first=not first_done)
            first_done = True
    records.sort(key=lambda r: (r.timestamp, r.commit_id))
    states = {d.canonical_key: [STATES[s] for s in seqs[i]] for i, d in enumerate(devs)}
    return SyntheticLog(records, states, window_days, t0)
