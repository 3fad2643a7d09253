import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coordnet.ingest import ArtifactId, CommitRecord, DeveloperId
from coordnet.windows import DAY, WindowSpec, make_windows, stream_networks, window_corpus


def rec(i, ts, dev="d", art="f", text=None):
    a = ArtifactId("x.c", art)
    return CommitRecord(f"c{i}", DeveloperId(dev), int(ts), frozenset([a]), {a: text} if text else {})


def ids(window):
    return [c.commit_id for c in window.commits]


def layout_nine():
    """Nine commits over two half-overlapping windows of width 4 days."""
    days = [0.2, 0.9, 1.5, 2.1, 2.9, 3.7, 4.4, 5.3, 5.9]
    return [rec(i + 1, d * DAY, dev=f"d{i % 4}") for i, d in enumerate(days)]


def test_overlapping_layout():
    ws = make_windows(layout_nine(), WindowSpec(window_days=4, step_days=2, t0=0))
    w0, w1 = set(ids(ws[0])), set(ids(ws[1]))
    assert {f"c{i}" for i in range(1, 7)} <= w0
    assert {f"c{i}" for i in range(4, 10)} <= w1
    assert w0 & w1 == {"c4", "c5", "c6"}


def test_non_overlapping_partition():
    stream = layout_nine()
    ws = make_windows(stream, WindowSpec(window_days=2, step_days=2, t0=0).non_overlapping())
    seen = [c for w in ws for c in ids(w)]
    assert sorted(seen) == sorted(c.commit_id for c in stream)


def test_single_commit():
    # window 0 holds it; window 1 would start after the last commit
    ws = make_windows([rec(1, 1000)], WindowSpec(90, 45))
    assert len(ws) == 1 and ids(ws[0]) == ["c1"] and ws[0].partial


def test_boundary_commit_in_both_windows():
    stream = [rec(1, 0), rec(2, 45 * DAY), rec(3, 90 * DAY), rec(4, 200 * DAY)]
    ws = make_windows(stream)
    assert "c2" in ids(ws[0]) and "c2" in ids(ws[1])
    assert "c3" in ids(ws[0]) and "c3" in ids(ws[1]) and "c3" in ids(ws[2])


def test_empty_windows_kept():
    ws = make_windows([rec(1, 0), rec(2, 400 * DAY)], WindowSpec(90, 45))
    assert [w.index for w in ws] == list(range(len(ws)))
    assert any(not w.commits for w in ws)
    assert ws[-1].t_start <= 400 * DAY


def test_spec_validation():
    with pytest.raises(ValueError):
        WindowSpec(10, 20)
    with pytest.raises(ValueError):
        WindowSpec(0, 0)
    with pytest.raises(ValueError):
        make_windows([rec(1, 10), rec(2, 5)])


@settings(max_examples=80, deadline=None)
@given(st.lists(st.integers(0, 2000 * DAY), min_size=1, max_size=40), st.integers(10, 120), st.data())
def test_overlap_law_and_coverage(times, width, data):
    step = data.draw(st.integers(1, width))
    stream = [rec(i, t) for i, t in enumerate(sorted(times))]
    spec = WindowSpec(width, step)
    ws = make_windows(stream, spec)
    t0 = stream[0].timestamp
    for c in stream:
        member = [w.index for w in ws if c in w.commits]
        assert member, "every commit lies in some window"
        expect = [w.index for w in ws if w.t_start <= c.timestamp <= w.t_end]
        assert member == expect
        for w in ws:
            assert (w.t_start <= c.timestamp <= w.t_end) == (c in w.commits)
    for w in ws:
        assert w.t_start == t0 + w.index * spec.step_seconds
        assert w.t_end - w.t_start == spec.window_seconds


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(0, 1000 * DAY), min_size=1, max_size=40))
def test_default_spec_interior_commits_in_two_windows(times):
    stream = [rec(i, t) for i, t in enumerate(sorted(times))]
    ws = make_windows(stream)
    last_start = ws[-1].t_start
    for c in stream:
        n = sum(c in w.commits for w in ws)
        off = (c.timestamp - stream[0].timestamp) % (45 * DAY)
        if c.timestamp >= stream[0].timestamp + 90 * DAY and c.timestamp <= last_start:
            assert n == (3 if off == 0 else 2)
        assert n >= 1


def test_corpus_takes_latest_text():
    stream = [rec(1, 0, art="f", text="old"), rec(2, 10, art="f", text="new"), rec(3, 20, art="g")]
    ws = make_windows(stream, WindowSpec(1, 1))
    corpus = window_corpus(ws[0])
    assert corpus[ArtifactId("x.c", "f")] == "new"
    assert corpus[ArtifactId("x.c", "g")] is None


def test_stream_networks():
    stream = [rec(1, 0, dev="a", art="f"), rec(2, 50 * DAY, dev="b", art="f"),
              rec(3, 300 * DAY, dev="c", art="g")]
    ws = make_windows(stream, WindowSpec(90, 45))
    nets = stream_networks(ws)
    assert [n.window_id for n in nets] == [w.index for w in ws]
    # commit 2 sits in windows 0 and 1; both networks contain developer b
    assert {d.canonical_key for d in nets[0].developers} == {"a", "b"}
    assert "b" in {d.canonical_key for d in nets[1].developers}
    assert nets[0].n_edges == 1
    empty = [n for n, w in zip(nets, ws) if not w.commits]
    assert empty and all(n.n_nodes == 0 for n in empty)
    last = nets[-1]
    assert last.n_nodes == 1 and last.n_edges == 0


def test_failing_window_does_not_abort(monkeypatch):
    import coordnet.windows as wmod

    stream = [rec(1, 0, dev="a"), rec(2, 100 * DAY, dev="b")]
    ws = make_windows(stream, WindowSpec(90, 90))
    real = wmod._network_for_window

    def flaky(window, cfg):
        if window.index == 0:
            raise RuntimeError("boom")
        return real(window, cfg)

    monkeypatch.setattr(wmod, "_network_for_window", flaky)
    nets = stream_networks(ws)
    assert nets[0].error and "boom" in nets[0].error
    assert nets[1].error is None and nets[1].n_nodes == 1


def test_parallel_equals_serial():
    rng = np.random.default_rng(0)
    stream = [rec(i, t, dev=f"d{rng.integers(6)}", art=f"f{rng.integers(5)}", text="alpha beta")
              for i, t in enumerate(sorted(rng.integers(0, 400 * DAY, size=60)))]
    ws = make_windows(stream)
    a = stream_networks(ws, workers=1)
    b = stream_networks(ws, workers=2)
    assert [x.to_json() for x in a] == [x.to_json() for x in b]
