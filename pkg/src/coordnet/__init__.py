"""Developer-coordination network streams mined from version control.

The pipeline linearizes a commit history, slices it into sliding windows,
builds one developer network per window from co-contributions to
semantically coupled artifacts, and tracks structural metrics (power-law
degree tails, clustering, Gini, hierarchy) and developer role turnover.
"""

__version__ = "0.1.0"

from .coupling import CouplingConfig, CouplingMatrix, semantic_coupling, tokenize
from .ingest import (
    ArtifactId,
    CommitRecord,
    DeveloperId,
    IngestError,
    linearize_history,
    load_contribution_log,
    write_contribution_log,
)
from .netstats import (
    MetricsConfig,
    WindowMetrics,
    clustering_coefficient,
    fit_hierarchy,
    gini,
    summarize_window,
)
from .network import ContributionMatrix, DeveloperNetwork, build_contrib, build_network
from .powerlaw import PowerLawFit, fit_power_law
from .roles import State, TransitionMatrix, classify, estimate_markov, role_sequences
from .windows import Window, WindowSpec, make_windows, stream_networks

__all__ = [
    "ArtifactId", "CommitRecord", "ContributionMatrix", "CouplingConfig", "CouplingMatrix",
    "DeveloperId", "DeveloperNetwork", "IngestError", "MetricsConfig", "PowerLawFit", "State",
    "TransitionMatrix", "Window", "WindowMetrics", "WindowSpec", "build_contrib", "build_network",
    "classify", "clustering_coefficient", "estimate_markov", "fit_hierarchy", "fit_power_law",
    "gini", "linearize_history", "load_contribution_log", "make_windows", "role_sequences",
    "semantic_coupling", "stream_networks", "summarize_window", "tokenize",
    "write_contribution_log",
]
