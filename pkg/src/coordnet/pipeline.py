"""End-to-end orchestration: ingest, windows, networks, metrics, outputs."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
import os
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from .coupling import DEFAULT_ENERGY, DEFAULT_THRESHOLD, MAX_RANK, CouplingConfig
from .ingest import IngestError, linearize_history, load_alias_map, load_contribution_log
from .netstats import HIERARCHY_METHODS, MetricsConfig, summarize_window
from .powerlaw import DEFAULT_REPS
from .report import emit_plot_data, write_metrics
from .roles import MarkovError, compare_window_modes, estimate_markov, role_sequences
from .synth import SCAFFOLD_DOMAIN
from .windows import WindowSpec, make_windows, stream_networks

log = logging.getLogger(__name__)


class ConfigError(ValueError):
    """Invalid run configuration; ``flag`` names the offending option."""

    def __init__(self, flag: str, message: str):
        super().__init__(f"{flag}: {message}")
        self.flag = flag


# dotted config-file keys and the fields they set
CONFIG_ALIASES = {
    "lsi.rank": "lsi_rank",
    "lsi.energy": "lsi_energy",
    "lsi.max_rank": "lsi_max_rank",
    "coupling.threshold": "threshold",
    "stopwords.path": "stopwords_path",
    "stopwords.languages": "languages",
    "window.days": "window_days",
    "window.step_days": "step_days",
    "bootstrap.reps": "bootstrap_reps",
    "markov.order": "markov_order",
}


@dataclass
class RunConfig:
    repo: str | None = None
    contrib_log: str | None = None
    branch: str = "master"
    granularity: str = "function"
    alias_map: str | None = None
    window_days: int = 90
    step_days: int = 45
    non_overlapping: bool = False
    threshold: float = DEFAULT_THRESHOLD
    lsi_rank: int | None = None
    lsi_energy: float = DEFAULT_ENERGY
    lsi_max_rank: int = MAX_RANK
    stopwords_path: str | None = None
    languages: tuple = ("en", "c")
    bootstrap_reps: int = DEFAULT_REPS
    skip_bootstrap: bool = False
    seed: int = 0
    hierarchy_method: str = "loglink"
    markov_order: int = 1
    percentile_basis: str = "nonzero"
    exclude_domains: tuple = (SCAFFOLD_DOMAIN,)
    out: str = "out"
    workers: int | None = None
    plots_svg: bool = True

    @classmethod
    def from_mapping(cls, data: dict) -> "RunConfig":
        """Build from a JSON-style mapping; nested objects flatten to dotted keys."""
        flat = {}

        def walk(prefix, obj):
            for k, v in obj.items():
                key = f"{prefix}.{k}" if prefix else k
                if isinstance(v, dict):
                    walk(key, v)
                else:
                    flat[key] = v

        walk("", data)
        names = {f.name for f in dataclasses.fields(cls)}
        kwargs = {}
        for key, value in flat.items():
            name = CONFIG_ALIASES.get(key, key.replace("-", "_"))
            if name not in names:
                raise ConfigError("--config", f"unknown key {key!r}")
            if name in ("languages", "exclude_domains") and isinstance(value, list):
                value = tuple(value)
            kwargs[name] = value
        return cls(**kwargs)

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError("--config", f"cannot read {path}: {e}") from e
        if not isinstance(data, dict):
            raise ConfigError("--config", "config file must hold one JSON object")
        return cls.from_mapping(data)

    def validate(self) -> None:
        if (self.repo is None) == (self.contrib_log is None):
            raise ConfigError("--repo/--contrib-log", "give exactly one input source")
        if self.repo is not None and not Path(self.repo).is_dir():
            raise ConfigError("--repo", f"repository path {self.repo} does not exist")
        if self.contrib_log is not None and not Path(self.contrib_log).is_file():
            raise ConfigError("--contrib-log", f"file {self.contrib_log} does not exist")
        if self.alias_map is not None and not Path(self.alias_map).is_file():
            raise ConfigError("--alias-map", f"file {self.alias_map} does not exist")
        if self.granularity not in ("function", "file"):
            raise ConfigError("--granularity", "must be 'function' or 'file'")
        if self.window_days <= 0:
            raise ConfigError("--window-days", "must be positive")
        if not self.non_overlapping and not 0 < self.step_days <= self.window_days:
            raise ConfigError("--step-days", "must lie in (0, window days]")
        if not 0 < self.threshold <= 1:
            raise ConfigError("coupling.threshold", "must lie in (0, 1]")
        if self.lsi_rank is not None and self.lsi_rank < 1:
            raise ConfigError("lsi.rank", "must be positive")
        if not 0 < self.lsi_energy <= 1:
            raise ConfigError("lsi.energy", "must lie in (0, 1]")
        if self.bootstrap_reps < 0:
            raise ConfigError("--bootstrap-reps", "must be non-negative")
        if self.markov_order not in (1, 2):
            raise ConfigError("--markov-order", "must be 1 or 2")
        if self.hierarchy_method not in HIERARCHY_METHODS:
            raise ConfigError("hierarchy_method", f"must be one of {', '.join(HIERARCHY_METHODS)}")
        if self.percentile_basis not in ("nonzero", "all"):
            raise ConfigError("percentile_basis", "must be 'nonzero' or 'all'")
        if self.stopwords_path is not None and not Path(self.stopwords_path).is_file():
            raise ConfigError("stopwords.path", f"file {self.stopwords_path} does not exist")

    @property
    def window_spec(self) -> WindowSpec:
        step = self.window_days if self.non_overlapping else self.step_days
        return WindowSpec(self.window_days, step)

    @property
    def coupling(self) -> CouplingConfig:
        return CouplingConfig(self.threshold, self.lsi_rank, self.lsi_energy, self.lsi_max_rank,
                              self.stopwords_path, tuple(self.languages))

    @property
    def metrics(self) -> MetricsConfig:
        return MetricsConfig(self.bootstrap_reps, self.seed, self.skip_bootstrap, self.hierarchy_method)

    def resolved_workers(self) -> int:
        n = self.workers or os.cpu_count() or 1
        cap = os.environ.get("COORDNET_THREADS")
        if cap:
            try:
                n = min(n, max(1, int(cap)))
            except ValueError:
                log.warning("ignoring non-integer COORDNET_THREADS=%r", cap)
        return max(1, n)

    def snapshot(self) -> dict:
        d = dataclasses.asdict(self)
        d["languages"] = list(self.languages)
        d["exclude_domains"] = list(self.exclude_domains)
        return d


# ---------------------------------------------------------------------------


def load_records(config: RunConfig):
    aliases = load_alias_map(config.alias_map) if config.alias_map else None
    if config.contrib_log is not None:
        return load_contribution_log(config.contrib_log, aliases)
    return linearize_history(config.repo, config.branch, config.granularity, aliases)


def _fingerprint(config, records) -> dict:
    fp = {
        "source": "contrib_log" if config.contrib_log else "repo",
        "path": str(config.contrib_log or config.repo),
        "n_commits": len(records),
        "n_developers": len({r.author for r in records}),
        "t_first": records[0].timestamp if records else None,
        "t_last": records[-1].timestamp if records else None,
    }
    if config.contrib_log:
        h = hashlib.sha256()
        with open(config.contrib_log, "rb") as fh:
            for chunk in iter(lambda: fh.read(1 << 20), b""):
                h.update(chunk)
        fp["sha256"] = h.hexdigest()
    return fp


def write_json_atomic(path, obj) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            json.dump(obj, fh, indent=2, sort_keys=True)
            fh.write("\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _excluder(domains):
    suffixes = tuple("@" + d.lower() for d in domains)
    if not suffixes:
        return None
    return lambda dev: dev.canonical_key.endswith(suffixes)


def _summarize(args):
    net, cfg = args
    try:
        return summarize_window(net, cfg)
    except Exception as e:  # noqa: BLE001 - report the window, keep the others
        from .netstats import WindowMetrics

        log.error("metrics for window %d failed: %s", net.window_id, e)
        return WindowMetrics(net.window_id, net.n_nodes, t_start=net.t_start, t_end=net.t_end,
                             partial=net.partial, error=f"{type(e).__name__}: {e}")


def compute_metrics(networks, config: MetricsConfig, workers: int = 1):
    jobs = [(n, config) for n in networks]
    if workers > 1 and len(jobs) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_summarize, jobs))
    return [_summarize(j) for j in jobs]


def markov_for(windows, networks, config: RunConfig):
    seqs = role_sequences(networks, [w.active for w in windows], config.percentile_basis,
                          exclude=_excluder(config.exclude_domains))
    return seqs, estimate_markov(seqs, config.markov_order)


def run_pipeline(config: RunConfig) -> dict:
    """Run every stage and write outputs under ``config.out``.

    Returns the manifest. On a fatal error the manifest records the failing
    stage before the exception propagates; files already written stay.
    """
    config.validate()
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    workers = config.resolved_workers()
    manifest = {
        "tool": "coordnet",
        "version": __version__,
        "config": config.snapshot(),
        "status": "running",
        "timings": {},
        "workers": workers,
    }
    t_all = time.perf_counter()
    stage = "ingest"

    def timed(name, fn, *a, **kw):
        nonlocal stage
        stage = name
        t = time.perf_counter()
        res = fn(*a, **kw)
        manifest["timings"][name] = round(time.perf_counter() - t, 3)
        return res

    try:
        records = timed("ingest", load_records, config)
        manifest["input"] = _fingerprint(config, records)
        if not records:
            raise IngestError("input holds no commits with file changes")
        windows = timed("windows", make_windows, records, config.window_spec)
        networks = timed("networks", stream_networks, windows, config.coupling, workers)

        def dump_networks():
            ndir = out / "networks"
            ndir.mkdir(exist_ok=True)
            for net in networks:
                with open(ndir / f"window_{net.window_id}.json", "w", encoding="utf-8") as fh:
                    json.dump(net.to_json(), fh, indent=1)
                    fh.write("\n")

        timed("network_export", dump_networks)
        metrics = timed("metrics", compute_metrics, networks, config.metrics, workers)
        timed("metrics_export", write_metrics, metrics, out / "metrics.csv")
        manifest["windows"] = [
            {
                "window": m.window_id, "t_start": m.t_start, "t_end": m.t_end,
                "partial": m.partial, "n_developers": m.n_developers,
                "status": "error" if m.error else ("empty" if m.n_developers == 0 else "ok"),
                **({"error": m.error} if m.error else {}),
            }
            for m in metrics
        ]
        manifest["n_windows"] = len(metrics)

        def markov():
            mdir = out / "markov"
            try:
                _, tm = markov_for(windows, networks, config)
            except MarkovError as e:
                manifest["markov"] = {"error": str(e)}
                log.warning("no Markov chain estimated: %s", e)
                return
            mdir.mkdir(exist_ok=True)
            tm.write_csv(mdir / "probs.csv", mdir / "counts.csv")
            manifest["markov"] = {"order": tm.order, "transitions": int(tm.counts.sum())}

        timed("markov", markov)
        timed("plots", emit_plot_data, metrics, out / "plots", config.plots_svg)
        manifest["status"] = "ok"
    except Exception as e:
        manifest["status"] = "failed"
        manifest["failed_stage"] = stage
        manifest["error"] = f"{type(e).__name__}: {e}"
        raise
    finally:
        manifest["timings"]["total"] = round(time.perf_counter() - t_all, 3)
        write_json_atomic(out / "manifest.json", manifest)
    return manifest


def run_markov_compare(config: RunConfig) -> dict:
    """Estimate the role chain with overlapping and non-overlapping windows."""
    config.validate()
    out = Path(config.out)
    workers = config.resolved_workers()
    records = load_records(config)
    if not records:
        raise IngestError("input holds no commits with file changes")
    seqs = {}
    specs = {
        "overlapping": WindowSpec(config.window_days, config.step_days),
        "non_overlapping": WindowSpec(config.window_days, config.window_days),
    }
    for mode, spec in specs.items():
        windows = make_windows(records, spec)
        nets = stream_networks(windows, config.coupling, workers)
        seqs[mode] = role_sequences(nets, [w.active for w in windows], config.percentile_basis,
                                    exclude=_excluder(config.exclude_domains))
    report = compare_window_modes(seqs["overlapping"], seqs["non_overlapping"], config.markov_order)
    for mode, entry in report.items():
        if "error" in entry:
            continue
        mdir = out / "markov" / mode
        mdir.mkdir(parents=True, exist_ok=True)
        tm = estimate_markov(seqs[mode], config.markov_order)
        tm.write_csv(mdir / "probs.csv", mdir / "counts.csv")
    write_json_atomic(out / "markov_compare.json", report)
    return report
