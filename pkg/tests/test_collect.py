import gc
import weakref

import pytest
from hypothesis import given, strategies as st

from conftest import record
from oracles import calls
from strategies import runs

from byrdscope.collect import (
    CollectSession, Monitor, MonitorError, SessionExhaustedError, collect_checkpointed,
    foldl_oracle, merge, run_collect,
)
from byrdscope.corpus import queens_program
from byrdscope.engine import EngineError, EngineOptions
from byrdscope.lang import parse_program, parse_query
from byrdscope.monitors import builtin_monitors, count_call_monitor, port_histogram_monitor
from byrdscope.trace_model import StopFlag

CONTINUE, STOP = StopFlag.CONTINUE, StopFlag.STOP
Q = parse_program("q.")
QQ = parse_query("q.")
ALL = EngineOptions(all_solutions=True)


def events_seen():
    return Monitor("seen", list, lambda e, acc: (acc + [e.chrono], CONTINUE))


def stop_at(n):
    return Monitor(f"stop-at-{n}", lambda: 0,
                   lambda e, k: (k + 1, STOP if e.chrono == n else CONTINUE))


def test_count_calls_on_fact():
    res = run_collect(Q, QQ, None, count_call_monitor())
    assert res.result == 1 and not res.stopped_early


def test_empty_run_keeps_initial_value():
    for m in builtin_monitors():
        res = run_collect(Q, parse_query("true."), None, m)
        assert res.result == m.initialize()


def test_stop_at_three():
    res = run_collect(queens_program(5), parse_query("main."), None, stop_at(3))
    assert res.result == 3 and res.stopped_early
    assert res.outcome.events_emitted == 3


def test_foldl_oracle_examples():
    assert foldl_oracle([], count_call_monitor()) == 0
    events, _ = record(queens_program(4), "main.")
    assert foldl_oracle(events[:10], stop_at(3)) == 3


def test_streaming_matches_oracle_on_queens5():
    events, _ = record(queens_program(5), "main.")
    for m in builtin_monitors():
        assert run_collect(queens_program(5), parse_query("main."), None, m).result \
            == foldl_oracle(events, m)


def test_merge_singleton():
    events, _ = record(Q, QQ, all_solutions=True)
    (acc,) = foldl_oracle(events, merge([count_call_monitor()]))
    assert acc == 1


def test_merge_pair_matches_separate_runs():
    prog, query = queens_program(4), parse_query("main.")
    merged = run_collect(prog, query, None, merge([count_call_monitor(), port_histogram_monitor()]))
    assert merged.result == (
        run_collect(prog, query, None, count_call_monitor()).result,
        run_collect(prog, query, None, port_histogram_monitor()).result,
    )


def test_merge_stops_when_any_part_stops():
    res = run_collect(queens_program(5), parse_query("main."), None,
                      merge([events_seen(), stop_at(5)]))
    seen, k = res.result
    assert seen == [1, 2, 3, 4, 5] and k == 5 and res.stopped_early


def test_merge_render_and_empty():
    m = merge([count_call_monitor(), port_histogram_monitor()])
    acc = run_collect(Q, QQ, None, m).result
    assert m.render(acc) == (1, {"call": 1, "exit": 1})
    with pytest.raises(ValueError):
        merge([])


def test_checkpoint_every_event():
    snaps = []
    final = collect_checkpointed(Q, QQ, ALL, events_seen(), 1, snaps.append)
    assert final == [1, 2, 3, 4]
    assert snaps == [[1], [1, 2], [1, 2, 3], [1, 2, 3, 4]]


def test_checkpoint_interval_longer_than_trace():
    snaps = []
    final = collect_checkpointed(Q, QQ, ALL, events_seen(), 50, snaps.append)
    assert snaps == [] and final == [1, 2, 3, 4]


def test_checkpoint_every_seven_on_queens5():
    prog, query = queens_program(5), parse_query("main.")
    snaps = []
    final = collect_checkpointed(prog, query, None, count_call_monitor(), 7, snaps.append)
    events, _ = record(prog, query)
    assert final == run_collect(prog, query, None, count_call_monitor()).result == calls(events)
    assert len(snaps) == len(events) // 7
    assert snaps == sorted(snaps)


def test_checkpoint_snapshots_are_copies():
    snaps = []
    collect_checkpointed(Q, QQ, ALL, port_histogram_monitor(), 1, snaps.append)
    assert [sum(s.values()) for s in snaps] == [1, 2, 3, 4]


def test_session_resume_after_exhaustion():
    session = CollectSession(Q, QQ, ALL, count_call_monitor(), every_n=2)
    session.resume()
    assert not session.exhausted and session.events_folded == 2
    session.resume()
    session.resume()
    assert session.exhausted and session.accumulator == 1
    with pytest.raises(SessionExhaustedError):
        session.resume()


def test_session_close_unwinds():
    with CollectSession(queens_program(5), parse_query("main."), None,
                        count_call_monitor(), every_n=5) as session:
        session.resume()
        assert session.events_folded == 5
    assert session.exhausted


def test_session_propagates_engine_errors():
    prog = parse_program("p :- X is Y + 1.")
    session = CollectSession(prog, parse_query("p."), None, count_call_monitor(), every_n=1)
    session.resume()
    with pytest.raises(EngineError):
        session.resume()


def test_checkpoint_rejects_bad_interval():
    with pytest.raises(ValueError):
        collect_checkpointed(Q, QQ, None, count_call_monitor(), 0, lambda a: None)


def test_monitor_error_carries_chrono():
    def boom(e, acc):
        if e.chrono == 4:
            raise RuntimeError("bad step")
        return acc, CONTINUE

    with pytest.raises(MonitorError) as info:
        run_collect(queens_program(5), parse_query("main."), None, Monitor("boom", int, boom))
    assert info.value.chrono == 4 and info.value.monitor == "boom"


def test_run_collect_retains_constant_events():
    alive = []
    peak = 0

    def step(event, acc):
        nonlocal peak
        alive.append(weakref.ref(event))
        if event.chrono % 500 == 0:
            gc.collect()
        live = sum(1 for r in alive if r() is not None)
        peak = max(peak, live)
        alive[:] = [r for r in alive if r() is not None]
        return acc + 1, CONTINUE

    prog = queens_program(6)
    res = run_collect(prog, parse_query("data(D), queen(D, Out)."),
                      EngineOptions(all_solutions=True, emit_internal_events=True),
                      Monitor("retention", int, step))
    assert res.result > 10_000
    assert peak <= 2


@given(runs(), st.integers(1, 12))
def test_checkpoint_transparency_random(run, every_n):
    text, query, all_solutions = run
    prog, goal = parse_program(text), parse_query(query)
    opts = EngineOptions(all_solutions=all_solutions, emit_internal_events=True)
    for m in builtin_monitors():
        one_shot = run_collect(prog, goal, opts, m).result
        assert collect_checkpointed(prog, goal, opts, m, every_n, lambda a: None) == one_shot


@given(runs(), st.lists(st.integers(0, 6), min_size=1, max_size=4, unique=True))
def test_merge_soundness_random(run, picks):
    text, query, all_solutions = run
    prog, goal = parse_program(text), parse_query(query)
    opts = EngineOptions(all_solutions=all_solutions, emit_internal_events=True)
    parts = [builtin_monitors()[i] for i in picks]
    merged = run_collect(prog, goal, opts, merge(parts)).result
    assert merged == tuple(run_collect(prog, goal, opts, m).result for m in parts)
