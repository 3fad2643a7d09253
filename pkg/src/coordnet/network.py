"""Developer coordination networks: contribution matrix times coupling."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .ingest import ArtifactId, CommitRecord, DeveloperId


@dataclass
class ContributionMatrix:
    developers: list[DeveloperId]
    artifacts: list[ArtifactId]
    f: sp.csr_array  # M x N, entries 0/1

    def toarray(self) -> np.ndarray:
        return self.f.toarray()


@dataclass
class DeveloperNetwork:
    """Symmetric, zero-diagonal integer weights over developers.

    Degree, clustering and hierarchy work on the binarized graph (edge iff
    weight > 0); exports keep the integer weights.
    """

    developers: list[DeveloperId]
    weights: sp.csr_array
    window_id: int = 0
    t_start: int | None = None
    t_end: int | None = None
    partial: bool = False
    error: str | None = None

    @classmethod
    def empty(cls, window_id=0, t_start=None, t_end=None, partial=False, error=None):
        return cls([], sp.csr_array((0, 0), dtype=np.int64), window_id, t_start, t_end, partial, error)

    @classmethod
    def from_edges(cls, n: int, edges, window_id: int = 0, prefix: str = "n"):
        """Unweighted network on ``n`` synthetic nodes from an edge list."""
        edges = np.asarray(list(edges), dtype=np.int64).reshape(-1, 2)
        edges = edges[edges[:, 0] != edges[:, 1]]
        rows = np.concatenate([edges[:, 0], edges[:, 1]])
        cols = np.concatenate([edges[:, 1], edges[:, 0]])
        w = sp.coo_array((np.ones(len(rows), dtype=np.int64), (rows, cols)), shape=(n, n)).tocsr()
        w.data[:] = 1  # collapse duplicate edges
        devs = [DeveloperId(f"{prefix}{i}") for i in range(n)]
        return cls(devs, w, window_id)

    @classmethod
    def from_adjacency(cls, adj, window_id: int = 0, prefix: str = "n"):
        a = np.asarray(adj)
        a = np.triu(a, 1)
        a = a + a.T
        devs = [DeveloperId(f"{prefix}{i}") for i in range(a.shape[0])]
        return cls(devs, sp.csr_array(a.astype(np.int64)), window_id)

    @property
    def n_nodes(self) -> int:
        return len(self.developers)

    @property
    def adjacency(self) -> sp.csr_array:
        a = (self.weights > 0).astype(np.int8)
        return sp.csr_array(a)

    def degrees(self) -> np.ndarray:
        if self.n_nodes == 0:
            return np.zeros(0, dtype=np.int64)
        return np.asarray(self.adjacency.sum(axis=1)).ravel().astype(np.int64)

    @property
    def n_edges(self) -> int:
        return int(self.adjacency.sum() // 2)

    def edge_list(self) -> list[list[int]]:
        upper = sp.triu(self.weights, k=1).tocoo()
        order = np.lexsort((upper.col, upper.row))
        return [[int(upper.row[k]), int(upper.col[k]), int(upper.data[k])] for k in order if upper.data[k] > 0]

    def to_json(self) -> dict:
        return {
            "window": self.window_id,
            "t_start": self.t_start,
            "t_end": self.t_end,
            "nodes": [d.canonical_key for d in self.developers],
            "edges": self.edge_list(),
        }


def build_contrib(commits: list[CommitRecord]) -> ContributionMatrix:
    """Binary developer x artifact matrix, rows/columns in first-appearance order."""
    if not commits:
        raise ValueError("cannot build a contribution matrix from no commits")
    dev_index: dict[DeveloperId, int] = {}
    art_index: dict[ArtifactId, int] = {}
    pairs = set()
    for c in commits:
        i = dev_index.setdefault(c.author, len(dev_index))
        for a in sorted(c.touched):
            j = art_index.setdefault(a, len(art_index))
            pairs.add((i, j))
    rows, cols = zip(*sorted(pairs)) if pairs else ((), ())
    f = sp.csr_array(
        (np.ones(len(rows), dtype=np.int64), (np.array(rows, dtype=np.int64), np.array(cols, dtype=np.int64))),
        shape=(len(dev_index), len(art_index)),
    )
    return ContributionMatrix(list(dev_index), list(art_index), f)


def build_network(contrib: ContributionMatrix, coupling, window_id: int = 0, **meta) -> DeveloperNetwork:
    """D = F Phi F^T with the diagonal zeroed.

    ``coupling`` is a CouplingMatrix (its artifact order must match) or a bare
    N x N 0/1 matrix.
    """
    artifacts = getattr(coupling, "artifacts", None)
    phi = getattr(coupling, "phi", coupling)
    if artifacts is not None and list(artifacts) != list(contrib.artifacts):
        raise ValueError("coupling artifacts do not match contribution artifacts (order matters)")
    phi = sp.csr_array(phi, dtype=np.int64)
    n = len(contrib.artifacts)
    if phi.shape != (n, n):
        raise ValueError(f"coupling matrix shape {phi.shape} does not match {n} artifacts")
    f = sp.csr_array(contrib.f, dtype=np.int64)
    d = (f @ phi @ f.T).tocsr()
    d.setdiag(0)
    d.eliminate_zeros()
    d.sort_indices()
    return DeveloperNetwork(list(contrib.developers), sp.csr_array(d), window_id, **meta)


def coordination_matrix(contrib: ContributionMatrix, coupling) -> np.ndarray:
    """Dense F Phi F^T before the diagonal is cleared."""
    phi = getattr(coupling, "phi", coupling)
    f = np.asarray(contrib.f.toarray(), dtype=np.int64)
    phi = phi.toarray() if sp.issparse(phi) else np.asarray(phi)
    return f @ phi.astype(np.int64) @ f.T
