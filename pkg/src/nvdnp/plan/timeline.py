"""Compile a plan AST into absolute-time channel events."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from ..errors import CompileError
from .language import (
    PHASE_DEG, Acquire, LaserOff, LaserOn, Loop, MwOff, MwOn, PlanAst, Pulse, Saturate, Wait,
)

CHANNELS = ("laser", "mw", "rf", "acq", "delay")


@dataclass(frozen=True)
class PlanDefaults:
    saturation_spacing: float = 10e-3  # s between saturation pulses
    pulse_length: float = 0.0  # rf pulses are instantaneous unless set


@dataclass(frozen=True)
class Event:
    t_start: float
    channel: str
    payload: dict = field(hash=False)
    duration: float = 0.0

    @property
    def t_end(self):
        return self.t_start + self.duration

    def as_dict(self):
        return {"t_start": self.t_start, "channel": self.channel,
                "duration": self.duration, "payload": self.payload}


@dataclass
class Timeline:
    events: list
    duration: float

    def __len__(self):
        return len(self.events)

    def channel(self, name):
        return [e for e in self.events if e.channel == name]

    def to_json(self):
        return json.dumps({"duration": self.duration,
                           "events": [e.as_dict() for e in self.events]},
                          indent=2, sort_keys=True) + "\n"


def statement_duration(stmt, defaults: PlanDefaults):
    if isinstance(stmt, Saturate):
        return stmt.n * defaults.saturation_spacing
    if isinstance(stmt, Wait):
        return stmt.duration.seconds
    if isinstance(stmt, Pulse):
        return defaults.pulse_length
    if isinstance(stmt, Acquire):
        return stmt.n_points * stmt.dwell.seconds
    if isinstance(stmt, Loop):
        return stmt.count * sum(statement_duration(s, defaults) for s in stmt.body)
    return 0.0


def plan_duration(ast: PlanAst, defaults=PlanDefaults()):
    return sum(statement_duration(s, defaults) for s in ast.statements)


def compile_timeline(ast: PlanAst, defaults=PlanDefaults()) -> Timeline:
    """Unroll loops and place every statement at its absolute start time.

    Saturation blocks emit one 90-degree x pulse centered in each spacing
    interval, so they never coincide with neighboring statements. ``wait``
    emits a ``delay`` event so the timeline mirrors the statement sequence.
    """
    events = []
    clock = 0.0

    def place(stmts, loop_path):
        nonlocal clock
        for stmt in stmts:
            src = {"line": stmt.pos[0], "column": stmt.pos[1]}
            if loop_path:
                src["iteration"] = list(loop_path)
            if isinstance(stmt, Loop):
                for it in range(stmt.count):
                    place(stmt.body, loop_path + (it,))
                continue
            if isinstance(stmt, Saturate):
                for i in range(stmt.n):
                    t = clock + (i + 0.5) * defaults.saturation_spacing - defaults.pulse_length / 2
                    events.append(Event(t, "rf", {"kind": "saturation", "angle_deg": 90.0,
                                                  "phase": "x", "index": i, **src},
                                        defaults.pulse_length))
            elif isinstance(stmt, Wait):
                events.append(Event(clock, "delay", {"kind": "wait", **src}, stmt.duration.seconds))
            elif isinstance(stmt, MwOn):
                events.append(Event(clock, "mw", {"kind": "on", "frequency_GHz": stmt.frequency.ghz,
                                                  **src}))
            elif isinstance(stmt, MwOff):
                events.append(Event(clock, "mw", {"kind": "off", **src}))
            elif isinstance(stmt, LaserOn):
                events.append(Event(clock, "laser", {"kind": "on", **src}))
            elif isinstance(stmt, LaserOff):
                events.append(Event(clock, "laser", {"kind": "off", **src}))
            elif isinstance(stmt, Pulse):
                events.append(Event(clock, "rf", {"kind": "pulse", "angle_deg": stmt.angle,
                                                  "phase": stmt.phase,
                                                  "phase_deg": PHASE_DEG[stmt.phase], **src},
                                    defaults.pulse_length))
            elif isinstance(stmt, Acquire):
                events.append(Event(clock, "acq", {"kind": "acquire", "n_points": stmt.n_points,
                                                   "dwell_s": stmt.dwell.seconds, **src},
                                    stmt.n_points * stmt.dwell.seconds))
            else:
                raise CompileError(f"unsupported statement {stmt!r}")
            clock += statement_duration(stmt, defaults)

    place(ast.statements, ())
    events.sort(key=lambda e: e.t_start)  # stable: preserves program order at equal times
    check_overlaps(events)
    return Timeline(events, clock)


def _describe(e):
    p = e.payload
    where = f"line {p.get('line')}" + (f" iteration {p['iteration']}" if "iteration" in p else "")
    return f"{e.channel}:{p.get('kind')} at t={e.t_start:.9g} s ({where})"


def check_overlaps(events):
    rf = [e for e in events if e.channel == "rf"]
    for a, b in zip(rf, rf[1:]):
        if b.t_start < a.t_end or b.t_start == a.t_start:
            raise CompileError(f"overlapping rf pulses: {_describe(a)} and {_describe(b)}", (a, b))
    for acq in (e for e in events if e.channel == "acq"):
        for p in rf:
            if p.t_start < acq.t_end and p.t_end > acq.t_start and not (
                p.duration == 0 and p.t_start == acq.t_start
            ):
                raise CompileError(
                    f"rf pulse during acquisition: {_describe(p)} and {_describe(acq)}", (p, acq)
                )
