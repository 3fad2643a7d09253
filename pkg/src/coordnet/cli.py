"""Command line entry point: ``coordnet analyze|extract|synth|markov-compare``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__

log = logging.getLogger("coordnet")

EXIT_OK, EXIT_FAILED, EXIT_USAGE = 0, 1, 2

# rows/cols: core, peripheral, isolated, absent
DEFAULT_CHAIN = [
    [0.839, 0.155, 0.001, 0.005],
    [0.050, 0.824, 0.017, 0.109],
    [0.000, 0.330, 0.510, 0.160],
    [0.000, 0.008, 0.001, 0.991],
]


def _input_flags(p):
    g = p.add_argument_group("input")
    g.add_argument("--repo", help="path to a git clone")
    g.add_argument("--branch", help="branch to linearize (default master)")
    g.add_argument("--granularity", choices=["function", "file"], help="artifact granularity")
    g.add_argument("--alias-map", dest="alias_map", help="email alias map (JSON or two columns)")
    g.add_argument("--contrib-log", dest="contrib_log", help="pre-extracted JSONL log (bypasses --repo)")


def _window_flags(p):
    g = p.add_argument_group("windows")
    g.add_argument("--window-days", dest="window_days", type=int, help="window length in days (default 90)")
    g.add_argument("--step-days", dest="step_days", type=int, help="window step in days (default 45)")


def _common(p):
    p.add_argument("--config", help="JSON config file; flags override its values")
    p.add_argument("--out", help="output directory")
    p.add_argument("--markov-order", dest="markov_order", type=int, choices=[1, 2])
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="coordnet", description=__doc__)
    parser.add_argument("--version", action="version", version=f"coordnet {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="full pipeline: networks, metrics, Markov chain, plots",
                       argument_default=argparse.SUPPRESS)
    _input_flags(a)
    _window_flags(a)
    _common(a)
    a.add_argument("--non-overlapping", dest="non_overlapping", action="store_true",
                   help="step = window (disjoint windows)")
    a.add_argument("--bootstrap-reps", dest="bootstrap_reps", type=int, help="KS bootstrap replicates (default 2500)")
    a.add_argument("--seed", type=int, help="bootstrap seed (default 0)")
    a.add_argument("--skip-bootstrap", dest="skip_bootstrap", action="store_true")
    a.add_argument("--threshold", type=float, help="cosine coupling threshold (default 0.65)")
    a.add_argument("--hierarchy-method", dest="hierarchy_method", choices=["loglink", "huber", "ols"])
    a.add_argument("--no-svg", dest="plots_svg", action="store_false", help="write plot CSVs only")
    a.add_argument("--workers", type=int, help="worker processes (capped by COORDNET_THREADS)")

    e = sub.add_parser("extract", help="ingest only; write a JSONL contribution log",
                       argument_default=argparse.SUPPRESS)
    _input_flags(e)
    e.add_argument("--out", required=True, help="output JSONL path")
    e.add_argument("-v", "--verbose", action="store_true")

    m = sub.add_parser("markov-compare", help="role chains for overlapping vs non-overlapping windows",
                       argument_default=argparse.SUPPRESS)
    _input_flags(m)
    _window_flags(m)
    _common(m)

    s = sub.add_parser("synth", help="reference networks, degree samples and commit logs")
    s.add_argument("--kind", required=True,
                   choices=["er", "preferential_attachment", "hierarchical", "powerlaw_degrees",
                            "markov_commit_log"])
    s.add_argument("--out", required=True, help="output path (.json, or .jsonl for commit logs)")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--n", type=int, default=1000, help="nodes or samples")
    s.add_argument("--p", type=float, default=0.01, help="ER edge probability")
    s.add_argument("--m", type=int, default=3, help="edges per new node (preferential attachment)")
    s.add_argument("--levels", type=int, default=3)
    s.add_argument("--motif", type=int, default=5, help="hierarchical seed motif size")
    s.add_argument("--alpha", type=float, default=2.5)
    s.add_argument("--k-min", dest="k_min", type=int, default=5)
    s.add_argument("--chain", help="JSON 4x4 chain (core, peripheral, isolated, absent)")
    s.add_argument("--n-devs", dest="n_devs", type=int, default=200)
    s.add_argument("--n-windows", dest="n_windows", type=int, default=20)
    s.add_argument("--window-days", dest="window_days", type=int, default=90)
    s.add_argument("-v", "--verbose", action="store_true")
    return parser


def _run_config(ns):
    from .pipeline import RunConfig

    opts = vars(ns).copy()
    for k in ("command", "verbose", "config"):
        opts.pop(k, None)
    base = RunConfig.from_file(ns.config) if getattr(ns, "config", None) else RunConfig()
    for k, v in opts.items():
        setattr(base, k, v)
    # an explicit input flag replaces the other source from the config file
    if "contrib_log" in opts and "repo" not in opts:
        base.repo = None
    elif "repo" in opts and "contrib_log" not in opts:
        base.contrib_log = None
    return base


def _synth(ns) -> int:
    from . import synth
    from .ingest import write_contribution_log

    out = Path(ns.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    if ns.kind == "markov_commit_log":
        chain = DEFAULT_CHAIN
        if ns.chain:
            chain = json.loads(Path(ns.chain).read_text(encoding="utf-8"))
        res = synth.gen_markov_commit_log(np.asarray(chain, dtype=float), ns.n_devs, ns.n_windows,
                                          seed=ns.seed, window_days=ns.window_days)
        write_contribution_log(res.records, out)
        return EXIT_OK
    if ns.kind == "powerlaw_degrees":
        deg = synth.gen_powerlaw_degrees(ns.n, ns.alpha, ns.k_min, seed=ns.seed)
        obj = {"kind": ns.kind, "alpha": ns.alpha, "k_min": ns.k_min, "seed": ns.seed,
               "degrees": deg.tolist()}
    else:
        if ns.kind == "er":
            net = synth.gen_er(ns.n, ns.p, seed=ns.seed)
        elif ns.kind == "preferential_attachment":
            net = synth.gen_pa(ns.n, ns.m, seed=ns.seed)
        else:
            net = synth.gen_hierarchical(ns.levels, ns.motif, seed=ns.seed)
        obj = net.to_json()
    with open(out, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=1)
        fh.write("\n")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(ns, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")

    from .ingest import IngestError
    from .pipeline import ConfigError

    try:
        if ns.command == "synth":
            return _synth(ns)
        if ns.command == "extract":
            from .ingest import write_contribution_log
            from .pipeline import load_records

            cfg = _run_config(ns)
            cfg.validate()
            records = load_records(cfg)
            Path(ns.out).parent.mkdir(parents=True, exist_ok=True)
            write_contribution_log(records, ns.out)
            print(f"wrote {len(records)} commits to {ns.out}")
            return EXIT_OK
        cfg = _run_config(ns)
        if ns.command == "analyze":
            from .pipeline import run_pipeline

            manifest = run_pipeline(cfg)
            print(f"{manifest['n_windows']} windows written to {cfg.out}")
            return EXIT_OK
        from .pipeline import run_markov_compare

        report = run_markov_compare(cfg)
        for mode, entry in report.items():
            if "error" in entry:
                print(f"{mode}: error: {entry['error']}")
            elif "core_leave" in entry:
                print(f"{mode}: P(core->absent)={entry['core_leave']:.4g} "
                      f"P(peripheral->absent)={entry['peripheral_leave']:.4g}")
        return EXIT_OK
    except ConfigError as e:
        print(f"coordnet: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except IngestError as e:
        print(f"coordnet: error: {e}", file=sys.stderr)
        return EXIT_FAILED
    except Exception as e:  # noqa: BLE001
        log.debug("fatal", exc_info=True)
        print(f"coordnet: error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
