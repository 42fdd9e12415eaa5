import time
from collections import Counter

import pytest

from t2script import Interpreter, VirtualClock
from t2script.errors import (
    DuplicateEvent,
    DuplicateTimerName,
    EventsDisabled,
    HostEventTrigger,
    TriggerOutsideEvent,
    UnknownEventBinding,
    UnknownTimer,
)
from t2script.events import TimerScheduler

EVENT = """#event on_new_user multi()
	args username;
	trigger;
#end on_new_user
"""

APPROVAL = """#event on_approval multi()
	args action;
	// default result
	result $_true;
	trigger @votes;
	foreach @vote in @votes {
		if $?[! $@vote] {
			return $_false;
		}
	}
#end on_approval

#function block_shutdown public() << on_approval
	whitelist @action shutdown exit;
	if $processing {
		return $_false;
	}
#end block_shutdown
"""


def test_multi_calls_all_in_order(interp):
    interp.load_source(
        "#event e multi()\n\ttrigger @r;\n\treturn $@r[0]$@r[1];\n#end e\n"
        "#function f public() << e\n\treturn F;\n#end f\n"
        "#function g public() << e\n\treturn G;\n#end g\n"
    )
    assert interp.execute("textout $=e[]").output == ["FG"]


def test_single_calls_exactly_one():
    seen = Counter()
    for seed in range(20):
        it = Interpreter(seed=seed)
        it.load_source(
            "#event e single()\n\ttrigger @r;\n\tarraysize @r @n;\n\treturn $@n.:$@r[0];\n#end e\n"
            "#function f public() << e\n\treturn F;\n#end f\n"
            "#function g public() << e\n\treturn G;\n#end g\n"
        )
        (line,) = it.execute("textout $=e[]").output
        n, pick = line.split(":")
        assert n == "1"
        seen[pick] += 1
    assert set(seen) == {"F", "G"}


def test_welcome():
    it = Interpreter()
    it.load_source(EVENT + "#function new_user public() << on_new_user\n\ttextout Welcome $@username;\n#end new_user\n")
    assert it.execute("expr $=on_new_user[Piotr]").output == ["Welcome Piotr"]


def test_no_registrants_leaves_array_unset(interp):
    interp.load_source("#event e multi()\n\ttrigger @votes;\n\tisset @votes @r;\n\treturn $@r;\n#end e\n")
    assert interp.execute("textout $=e[]").output == ["0"]


def test_approval(interp):
    interp.load_source(APPROVAL)
    interp.execute("setvar processing 1")
    assert interp.execute("textout $=on_approval[shutdown]").output == ["0"]
    assert interp.execute("textout $=on_approval[reboot]").output == ["1"]
    interp.execute("setvar processing 0")
    assert interp.execute("textout $=on_approval[shutdown]").output == ["1"]


def test_event_locals_are_copied(interp):
    interp.load_source(
        "#event e multi()\n\tsetvar @x orig;\n\ttrigger;\n\treturn $@x;\n#end e\n"
        "#function f public() << e\n\tsetvar @x changed;\n#end f\n"
    )
    assert interp.execute("textout $=e[]").output == ["orig"]


def test_duplicate_event(interp):
    interp.load_source(EVENT, "a")
    with pytest.raises(DuplicateEvent):
        interp.vm.events.define(interp.vm.events.get("on_new_user").definition)


def test_host_event_cannot_be_called_from_script():
    it = Interpreter(host_events=["on_load"])
    it.load_source("#function f public() << on_load\n\ttextout loaded;\n#end f\n")
    assert it.trigger("on_load").output == ["loaded"]
    r = it.execute("expr $=on_load[]")
    assert not r.ok
    assert isinstance(r.outcome.cause, HostEventTrigger)
    assert "on_load" in r.error


def test_unknown_binding(interp):
    with pytest.raises(UnknownEventBinding):
        interp.load_source("#function f public() << nowhere\n#end f\n")


def test_events_disabled():
    it = Interpreter(events_enabled=False)
    with pytest.raises(EventsDisabled):
        it.load_source(EVENT)


def test_trigger_outside_event(interp):
    interp.load_source("#function f private()\n\ttrigger;\n#end f\n")
    assert isinstance(interp.execute("function f").outcome.cause, TriggerOutsideEvent)


def test_registrant_error_propagates(interp):
    interp.load_source(
        "#event e multi()\n\ttrigger;\n#end e\n"
        "#function f public() << e\n\tsetvar @m boom;\n\tthrow @m;\n#end f\n"
    )
    assert interp.execute("expr $=e[]").error == "boom"


# -- timers ------------------------------------------------------------------

TIMER = """#function counter private()
	setvar @local Local variable;
	settimer auto 1000 10 {
		textout $@local;
	}
	setvar @local Hello;
#end counter
"""


def test_timer_snapshot_and_schedule(vinterp):
    vinterp.load_source(TIMER)
    assert vinterp.execute("function counter").ok
    assert vinterp.list_timers() == [("timer#1", 1000, 10)]
    assert vinterp.advance(999).output == []
    assert vinterp.advance(1).output == ["Local variable"]
    assert vinterp.advance(100000).output == ["Local variable"] * 9
    assert vinterp.list_timers() == []


def test_zero_iterations(vinterp):
    assert vinterp.execute("settimer t 10 0 textout x") is not None
    assert vinterp.list_timers() == []


def test_timer_names(vinterp):
    vinterp.load_source("#function f private()\n\tsettimer t 10 5 {\n\t\tnull;\n\t}\n\tsettimer t 10 5 {\n\t\tnull;\n\t}\n#end f\n")
    r = vinterp.execute("function f")
    assert isinstance(r.outcome.cause, DuplicateTimerName)
    vinterp.load_source("#function g private()\n\tsettimer auto 10 5 {\n\t\tnull;\n\t}\n#end g\n", "g")
    vinterp.execute("function g")
    assert len(vinterp.list_timers()) == 2
    vinterp.cancel_timer("t")
    assert [n for n, _, _ in vinterp.list_timers()] == ["timer#1"]
    with pytest.raises(UnknownTimer):
        vinterp.cancel_timer("t")
    assert vinterp.execute("killtimer timer#1").ok
    assert vinterp.list_timers() == []


def test_bad_timer_params(vinterp):
    vinterp.load_source("#function f private()\n\tsettimer t 0 5 {\n\t\tnull;\n\t}\n#end f\n")
    assert not vinterp.execute("function f").ok


def test_timer_errors_go_to_sink():
    sink = []
    it = Interpreter(clock=VirtualClock(), error_sink=sink.append)
    it.load_source("#function f private()\n\tsettimer t 5 2 {\n\t\tsetvar @m oops;\n\t\tthrow @m;\n\t}\n#end f\n")
    it.execute("function f")
    it.advance(10)
    assert sink == ["timer t: oops", "timer t: oops"]


def test_unload_cancels_module_timers(vinterp):
    vinterp.load_source(TIMER, "m")
    vinterp.execute("function counter")
    vinterp.unload_module("m")
    assert vinterp.list_timers() == []


def test_skip_on_backlog():
    clock = VirtualClock()
    sched = TimerScheduler(clock)
    t = sched.add("t", 10, 100, (), {})
    clock.set(55)
    (due,) = sched.due(clock.now())
    sched.after_firing(due, clock.now())
    assert t.next_due == 60 and t.remaining == 99


def test_wall_clock_timer_fires():
    it = Interpreter()
    it.load_source("#function f private()\n\tsettimer auto 5 3 {\n\t\ttextout tick;\n\t}\n#end f\n")
    lines = []
    it._host_output = lines.append
    it.execute("function f")
    start = time.monotonic()
    it.run_timers(timeout=2)
    assert lines == ["tick"] * 3
    assert time.monotonic() - start < 1
