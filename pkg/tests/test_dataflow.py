from collections import deque
from dataclasses import replace

import pytest
from hypothesis import given, strategies as st

from taupipe.dataflow import (
    DeadlockError,
    EngineConfig,
    FifoChannel,
    Pipeline,
    PipoChannel,
    Stage,
    StageSpec,
    Token,
    apply_cdc,
    build_trigger_pipeline,
    default_stage_specs,
    run_pipeline,
)
from taupipe.eventio import gen_events
from taupipe.stages import TriggerConfig, run_stages

CFG = TriggerConfig()


def tok(k, payload="x", produced=0, visible=0):
    return Token(k, payload, produced, visible)


# --- stage specs --------------------------------------------------------------


def test_stage_spec_validation():
    with pytest.raises(ValueError):
        StageSpec("s", 10, 0)
    with pytest.raises(ValueError):
        StageSpec("s", -1, 1)
    StageSpec("s", 38, 34)  # latency < ii is not required the other way around


# --- fifo channel ---------------------------------------------------------------


def test_fifo_backpressure_at_depth():
    ch = FifoChannel(depth=2)
    assert ch.push(tok(0))
    assert ch.push(tok(1))
    assert not ch.push(tok(2))  # third push without pops: backpressure
    assert ch.pop().iteration == 0
    assert ch.push(tok(2))  # freed slot accepts again


def test_fifo_pop_empty_is_stall():
    ch = FifoChannel(depth=2)
    assert ch.pop() is None
    assert ch.front() is None


def test_fifo_order():
    ch = FifoChannel(depth=4)
    ch.push(tok(0, "a"))
    ch.push(tok(1, "b"))
    assert ch.pop().payload == "a"
    assert ch.pop().payload == "b"


@given(st.lists(st.sampled_from(["push", "pop"]), max_size=60))
def test_fifo_matches_shadow_queue(script):
    ch = FifoChannel(depth=4)
    shadow = deque()
    n = 0
    for op in script:
        if op == "push":
            accepted = ch.push(tok(n))
            assert accepted == (len(shadow) < 4)
            if accepted:
                shadow.append(n)
                n += 1
        else:
            got = ch.pop()
            want = shadow.popleft() if shadow else None
            assert (got.iteration if got else None) == want
        assert ch.occupancy == len(shadow) <= 4


# --- pipo channel -----------------------------------------------------------------


def test_pipo_read_before_commit_is_empty():
    ch = PipoChannel(bank_capacity=4)
    assert ch.read(0) is None


def test_pipo_write_commit_read():
    ch = PipoChannel(bank_capacity=4)
    assert ch.write_bank(["x", "y"])
    assert ch.commit()
    assert ch.read(1) == "y"
    assert ch.read(0) == "x"


def test_pipo_reader_isolated_from_writer():
    ch = PipoChannel(bank_capacity=4)
    ch.write_bank(["x", "y"])
    ch.commit()
    assert ch.acquire()
    # iteration-2 data lands in the other bank; the held bank is untouched
    assert ch.write_bank(["p", "q"])
    assert ch.commit()
    assert ch.read(0) == "x" and ch.read(1) == "y"
    # both banks occupied now: the writer is backpressured
    assert not ch.write_bank(["r"])
    ch.release()
    assert ch.write_bank(["r"])


def test_pipo_stale_slots_readable():
    ch = PipoChannel(bank_capacity=4)
    ch.write_bank(["a", "b", "c"])
    ch.commit()
    assert ch.acquire()
    ch.release()
    ch.write_bank(["z"])  # lands in the other bank
    ch.commit()
    ch.write_bank(["only"])  # reuses the first bank: fresh head, stale tail
    ch.commit()
    assert ch.acquire()
    assert ch.read(0) == "z"
    ch.release()
    assert ch.acquire()
    assert ch.read(0) == "only"
    assert ch.read(1) == "b"  # stale leftover from two iterations ago
    with pytest.raises(IndexError):
        ch.read(4)


def test_pipo_commit_requires_staged_data():
    ch = PipoChannel(bank_capacity=2)
    assert not ch.commit()


def test_pipo_engine_token_interface():
    ch = PipoChannel(bank_capacity=2)
    assert ch.front() is None
    assert ch.push(tok(0, "a"))
    assert ch.push(tok(1, "b"))
    assert not ch.push(tok(2, "c"))  # both banks committed
    assert ch.front().payload == "a"
    assert ch.pop().payload == "a"
    assert ch.push(tok(2, "c"))
    assert ch.pop().payload == "b"
    assert ch.pop().payload == "c"


# --- engine timing ---------------------------------------------------------------


def chain(specs, hops=None, fn=None):
    fn = fn or (lambda x: x)
    hops = hops or [0] * len(specs)
    return Pipeline.chain([Stage(s, fn, hop_overhead_cycles=h) for s, h in zip(specs, hops)])


def test_single_stage_latency():
    run = run_pipeline(chain([StageSpec("s", 5, 5)]), ["e0"])
    assert run.metrics.sink_times == (5,)
    assert run.metrics.latency_cycles == 5
    assert run.outputs == ("e0",)


def test_two_stage_chain_latency():
    run = run_pipeline(chain([StageSpec("a", 3, 1), StageSpec("b", 4, 1)]), ["e0"])
    assert run.metrics.latency_cycles == 7


def test_paced_feed_matches_ii():
    run = run_pipeline(chain([StageSpec("s", 10, 10)]), ["e"] * 5, feed_period=10)
    assert run.metrics.ii_cycles == 10
    stats = run.metrics.stage_stats[0]
    assert stats.input_stall_cycles == 0
    assert stats.output_stall_cycles == 0


def test_feed_slower_than_pipeline_sets_spacing():
    run = run_pipeline(chain([StageSpec("s", 2, 1)]), ["e"] * 4, feed_period=9)
    assert run.metrics.ii_cycles == 9


def test_measured_ii_is_bottleneck_stage():
    specs = [StageSpec("a", 4, 3), StageSpec("b", 9, 7), StageSpec("c", 2, 2)]
    run = run_pipeline(chain(specs), ["e"] * 6)
    assert run.metrics.ii_cycles == 7


def test_hop_overhead_adds_to_effective_ii():
    specs = [StageSpec("a", 4, 3), StageSpec("b", 9, 7), StageSpec("c", 2, 2)]
    run = run_pipeline(chain(specs, hops=[0, 2, 0]), ["e"] * 6)
    assert run.metrics.ii_cycles == 9


def test_streaming_offset_shortens_latency():
    specs0 = [StageSpec("a", 20, 5), StageSpec("b", 10, 5)]
    base = run_pipeline(chain(specs0), ["e"]).metrics.latency_cycles
    specs1 = [StageSpec("a", 20, 5), StageSpec("b", 10, 5, start_offset_cycles=6)]
    overlapped = run_pipeline(chain(specs1), ["e"]).metrics.latency_cycles
    assert base == 30
    assert overlapped == 16  # starts 6 cycles after the producer, not after it ends


def test_default_trigger_chain_latency_figures():
    events = gen_events(3, 6, "clustered", CFG)
    runs = {}
    for merge, clean in (("A", "A"), ("B", "B")):
        pipe = build_trigger_pipeline(
            CFG, default_stage_specs(merge, clean), merge_solution=merge, clean_solution=clean
        )
        runs[(merge, clean)] = run_pipeline(pipe, events).metrics
    assert runs[("A", "A")].latency_cycles == 203
    assert runs[("B", "B")].latency_cycles == 200
    assert runs[("A", "A")].ii_cycles == 44
    assert runs[("B", "B")].ii_cycles == 44


def test_zero_handshake_ii_equals_max_stage_ii():
    engine = EngineConfig(hop_overheads=(0,) * 7)
    pipe = build_trigger_pipeline(CFG, engine=engine)
    events = gen_events(3, 6, "uniform", CFG)
    metrics = run_pipeline(pipe, events).metrics
    assert metrics.ii_cycles == max(s.ii_cycles for s in default_stage_specs().values()) == 43


def test_latency_monotone_in_stage_latency():
    events = gen_events(9, 4, "clustered", CFG)
    base_specs = default_stage_specs()
    base = run_pipeline(build_trigger_pipeline(CFG, base_specs), events).metrics.latency_cycles
    for name in base_specs:
        specs = dict(base_specs)
        specs[name] = replace(specs[name], latency_cycles=specs[name].latency_cycles + 5)
        bumped = run_pipeline(build_trigger_pipeline(CFG, specs), events).metrics.latency_cycles
        assert bumped >= base


def test_engine_is_deterministic():
    events = gen_events(21, 10, "busy", CFG)
    a = run_pipeline(build_trigger_pipeline(CFG), events)
    b = run_pipeline(build_trigger_pipeline(CFG), events)
    assert a.outputs == b.outputs
    assert a.metrics == b.metrics


def test_engine_outputs_equal_staged_functional_path():
    events = gen_events(33, 25, "clustered", CFG)
    for merge, clean in (("A", "B"), ("B", "A"), ("B", "B")):
        pipe = build_trigger_pipeline(
            CFG, default_stage_specs(merge, clean), merge_solution=merge, clean_solution=clean
        )
        run = run_pipeline(pipe, events)
        for ev, got in zip(events, run.outputs):
            assert got == run_stages(ev, CFG, merge, clean)


def test_channels_never_exceed_capacity():
    pipe = build_trigger_pipeline(CFG)
    run_pipeline(pipe, gen_events(2, 12, "clustered", CFG))
    for ch in pipe.channels:
        if isinstance(ch, FifoChannel):
            assert ch.max_occupancy <= ch.depth
        else:
            assert ch.max_occupancy <= 2


def test_pipo_channel_used_for_merge_b_edge():
    pipe_b = build_trigger_pipeline(CFG, merge_solution="B")
    pipe_a = build_trigger_pipeline(CFG, default_stage_specs("A", "B"), merge_solution="A")
    assert isinstance(pipe_b.channels[1], PipoChannel)
    assert isinstance(pipe_a.channels[1], FifoChannel)


def test_deadlock_detection_reports_blocked_stages():
    src = Stage(StageSpec("src", 1, 1), lambda x: x)
    mid = Stage(StageSpec("mid", 1, 1), lambda x: x)
    starved = Stage(StageSpec("starved", 1, 1), lambda x: x)
    ch = FifoChannel(4)
    src.out_channel = ch
    mid.in_channel = ch
    mid.out_channel = FifoChannel(4)  # drains nowhere, which is fine for one event
    starved.in_channel = FifoChannel(4)  # dangling: nobody ever writes it
    pipeline = Pipeline([src, mid, starved])
    with pytest.raises(DeadlockError) as err:
        run_pipeline(pipeline, ["e0"])
    assert err.value.blocked == ("starved",)


def test_apply_cdc():
    run = run_pipeline(build_trigger_pipeline(CFG), gen_events(1, 3, "uniform", CFG))
    m = run.metrics
    shifted = apply_cdc(m, 10)
    assert shifted.latency_cycles == m.latency_cycles + 10
    assert shifted.ii_cycles == m.ii_cycles
    assert shifted.cdc_overhead_cycles == 10
    assert apply_cdc(m, 0) == m
    with pytest.raises(ValueError):
        apply_cdc(m, -1)


def test_engine_config_validation():
    with pytest.raises(ValueError):
        EngineConfig(fifo_depth=0)
    with pytest.raises(ValueError):
        EngineConfig(hop_overheads=(1, 2))
    with pytest.raises(ValueError):
        EngineConfig(hop_overheads=(1,) * 6 + (-1,))
