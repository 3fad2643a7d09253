"""Flat-file outputs: metrics table, plot series and their SVG charts."""

from __future__ import annotations

import csv
import datetime as dt
import math
from pathlib import Path

import numpy as np

NUMBER_FORMAT = ".6g"

METRIC_COLUMNS = [
    "window_id", "t_start", "t_end", "partial", "n_developers", "n_edges",
    "gini", "mean_cc", "var_cc", "cc_ci_halfwidth", "n_cc",
    "alpha", "k_min", "n_tail", "pct_dev_scale_free", "ks_stat", "p_value", "is_scale_free",
    "beta0_global", "beta1_global", "p_beta1_global", "stderr_beta1_global", "r2_global", "n_points_global",
    "beta0_core", "beta1_core", "p_beta1_core", "stderr_beta1_core", "r2_core", "n_points_core",
    "hierarchy_method", "notes", "error",
]

PLOT_SERIES = {
    "growth_profile": ["time", "n_developers", "gini", "is_scale_free"],
    "clustering_series": ["time", "mean_cc", "ci"],
    "size_vs_clustering": ["n_developers", "mean_cc"],
    "hierarchy_series": ["time", "beta1", "stderr"],
}


def fmt(value) -> str:
    """Render one CSV cell: empty for missing, 6 significant digits for reals."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isnan(v):
            return ""
        return format(v, NUMBER_FORMAT)
    return str(value)


def write_csv(path, header, rows) -> None:
    """RFC 4180: comma separated, minimal quoting, CRLF line ends."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def _hier_cells(fit):
    if fit is None:
        return [None] * 6
    return [fit.beta0, fit.beta1, fit.p_beta1, fit.stderr_beta1, fit.r_squared, fit.n_points]


def metrics_row(m) -> list:
    pl = m.powerlaw
    method = None
    for fit in (m.hierarchy_global, m.hierarchy_core):
        if fit is not None:
            method = fit.method
            break
    return [
        m.window_id, m.t_start, m.t_end, m.partial, m.n_developers, m.n_edges,
        m.gini, m.mean_cc, m.var_cc, m.cc_ci_halfwidth, m.n_cc,
        pl.alpha if pl else None, pl.k_min if pl else None, pl.n_tail if pl else None,
        m.pct_dev_scale_free, pl.ks_stat if pl else None,
        pl.p_value if pl else None, pl.is_scale_free if pl else None,
        *_hier_cells(m.hierarchy_global), *_hier_cells(m.hierarchy_core),
        method, "; ".join(m.notes) if m.notes else None, m.error,
    ]


def write_metrics(metrics, path) -> None:
    write_csv(path, METRIC_COLUMNS, [metrics_row(m) for m in metrics])


def plot_series(metrics) -> dict:
    """The four plot series as {name: (header, rows)}, rows in window order."""
    growth, cc, size, hier = [], [], [], []
    for m in metrics:
        sf = m.powerlaw.is_scale_free if (m.powerlaw and m.powerlaw.p_value is not None) else None
        growth.append([m.t_start, m.n_developers, m.gini, sf])
        cc.append([m.t_start, m.mean_cc, m.cc_ci_halfwidth])
        size.append([m.n_developers, m.mean_cc])
        h = m.hierarchy_global
        hier.append([m.t_start, h.beta1 if h else None, h.stderr_beta1 if h else None])
    rows = {"growth_profile": growth, "clustering_series": cc,
            "size_vs_clustering": size, "hierarchy_series": hier}
    return {name: (PLOT_SERIES[name], rows[name]) for name in PLOT_SERIES}


# ---------------------------------------------------------------------------
# SVG rendering

SVG_RC = {
    "svg.hashsalt": "coordnet",
    "svg.fonttype": "none",
    "font.size": 9,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.linewidth": 1.2,
    "lines.markersize": 3,
}

SERIES_GID = "series"


def _as_float(v):
    return np.nan if v is None else float(v)


def _dates(times):
    return [dt.datetime.fromtimestamp(int(t), tz=dt.timezone.utc) for t in times]


def _new_axes():
    from matplotlib.figure import Figure

    fig = Figure(figsize=(5.0, 3.0))
    return fig, fig.add_subplot(1, 1, 1)


def _save(fig, path):
    import matplotlib

    with matplotlib.rc_context(SVG_RC):
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None, "Creator": None})


def render_svg(name: str, header, rows, path) -> None:
    """Line chart of one plot series; the data line carries gid ``series``."""
    import matplotlib

    with matplotlib.rc_context(SVG_RC):
        fig, ax = _new_axes()
        cols = list(zip(*rows)) if rows else [[] for _ in header]
        if name == "size_vs_clustering":
            x = np.array([_as_float(v) for v in cols[0]])
            y = np.array([_as_float(v) for v in cols[1]])
            ok = ~(np.isnan(x) | np.isnan(y))
            order = np.argsort(x[ok], kind="stable")
            line, = ax.plot(x[ok][order], y[ok][order], "o-")
            ax.set_xlabel("developers")
            ax.set_ylabel("mean clustering")
        else:
            t = _dates(cols[0])
            y = np.array([_as_float(v) for v in cols[1]])
            line, = ax.plot(t, y, "o-")
            ax.set_xlabel("window start")
            if name == "growth_profile":
                ax.set_ylabel("developers")
                g = np.array([_as_float(v) for v in cols[2]])
                ax2 = ax.twinx()
                ax2.plot(t, g, "--", color="0.4")
                ax2.set_ylabel("Gini", color="0.4")
                ax2.set_ylim(0, 1)
                sf = [i for i, v in enumerate(cols[3]) if v]
                if sf:
                    ax.plot([t[i] for i in sf], y[sf], "s", mfc="none", label="scale-free")
                    ax.legend(loc="upper left", frameon=False)
            elif name == "clustering_series":
                ci = np.array([_as_float(v) for v in cols[2]])
                ax.fill_between(t, y - ci, y + ci, alpha=0.25, lw=0)
                ax.set_ylabel("mean clustering")
            else:
                se = np.array([_as_float(v) for v in cols[2]])
                ax.fill_between(t, y - se, y + se, alpha=0.25, lw=0)
                ax.axhline(-1.0, color="0.5", lw=0.8, ls=":")
                ax.set_ylabel(r"$\beta_1$")
            fig.autofmt_xdate()
        line.set_gid(SERIES_GID)
        _save(fig, path)


def emit_plot_data(metrics, out_dir, svg: bool = True) -> list[Path]:
    """Write the four plot-series CSVs (and SVG charts) into ``out_dir``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for name, (header, rows) in plot_series(metrics).items():
        p = out_dir / f"{name}.csv"
        write_csv(p, header, rows)
        written.append(p)
        if svg:
            s = out_dir / f"{name}.svg"
            render_svg(name, header, rows, s)
            written.append(s)
    return written


def polyline_points(svg_path, gid: str = SERIES_GID) -> np.ndarray:
    """Vertex coordinates of the path inside the element with id ``gid``."""
    import re
    import xml.etree.ElementTree as ET

    root = ET.parse(svg_path).getroot()
    for el in root.iter():
        if el.get("id") == gid:
            for sub in el.iter():
                d = sub.get("d")
                if d:
                    nums = [float(v) for v in re.findall(r"-?\d+(?:\.\d+)?(?:e-?\d+)?", d)]
                    return np.array(nums).reshape(-1, 2)
    raise KeyError(f"no path with id {gid!r} in {svg_path}")
