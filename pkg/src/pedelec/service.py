"""Live session service: one closed-loop simulation per session, paced at
wall-clock rate, streaming tick records over a websocket and accepting
rider commands between ticks.

Concurrency model: each session owns one asyncio task that is the only
writer of controller/plant state.  Commands land in a mailbox and are
applied at the next tick boundary (zero-order hold), so results are
independent of arrival jitter within a tick.  Subscribers receive ticks
over fan-out queues; a slow or dropped subscriber loses delivery only,
never simulation state.

Every applied command is recorded with the tick index at which it took
effect; replaying that record through ``replay_session_record`` rebuilds
the per-tick inputs and reproduces the session log bit for bit.

The message and endpoint schema is documented field by field in
docs/protocol.md.
"""

from __future__ import annotations

import asyncio
import json
import logging
import secrets
from dataclasses import dataclass, field

from aiohttp import WSMsgType, web

from pedelec import __version__
from pedelec.config import dump_scenario, scenario_from_dict
from pedelec.core import TickRecord
from pedelec.harness import ClosedLoop, ScenarioScript, replay_inputs, smooth_reference

log = logging.getLogger(__name__)

BASE_SCRIPT_KEY = web.AppKey("base_script", ScenarioScript)
TIME_SCALE_KEY = web.AppKey("time_scale", float)
MAX_SESSIONS_KEY = web.AppKey("max_sessions", int)
SESSIONS_KEY = web.AppKey("sessions", dict)

DEFAULT_MAX_SESSIONS = 8
_SUBSCRIBER_QUEUE_SIZE = 512

COMMANDS = ("set_human_power", "set_m_star", "pause", "resume", "reset")


def tick_message(rec: TickRecord, epoch: int, index: int) -> dict:
    """Wire form of one tick record."""
    s = rec.sample
    return {
        "type": "tick",
        "epoch": epoch,
        "index": index,
        "t": s.t,
        "m_star": rec.m_star,
        "m": s.ratio_m,
        "p_human_raw": s.p_human_raw,
        "p_human_filt": s.p_human_out,
        "p_motor_filt": s.p_motor_out,
        "p_motor_target": rec.p_motor_target,
        "p_motor_actual": rec.p_motor_actual,
        "y": rec.y_control,
        "p_threshold": rec.p_threshold,
        "mode": rec.mode_flag,
        "vr": rec.ventilation_rate,
        "idle": s.idle,
        "fault": rec.fault,
    }


@dataclass
class EpochRecord:
    """Command timeline of one epoch, sufficient for exact offline replay."""

    epoch: int
    commands: list[dict] = field(default_factory=list)
    tick_count: int = 0  # highest tick index produced in this epoch

    def to_dict(self) -> dict:
        return {
            "epoch": self.epoch,
            "commands": self.commands,
            "tick_count": self.tick_count,
        }


class Session:
    """One live closed-loop simulation plus its command mailbox."""

    def __init__(self, script: ScenarioScript, time_scale: float = 1.0):
        self.id = secrets.token_hex(8)
        self.script = script
        self.time_scale = time_scale
        self.epoch = 0
        self.tick_index = 0
        self.live_human = 0.0
        self.live_m_star: float | None = None
        self.paused = False
        self.mailbox: asyncio.Queue[dict] = asyncio.Queue()
        self.subscribers: set[asyncio.Queue] = set()
        self.records: list[EpochRecord] = [EpochRecord(epoch=0)]
        self.latest: dict | None = None
        self._task: asyncio.Task | None = None
        self._build_engine()

    def _build_engine(self) -> None:
        m0 = smooth_reference(self.script.reference, 0.0)
        self.engine = ClosedLoop(self.script, 0.0, m0)
        self.live_human = 0.0
        self.live_m_star = None
        self.tick_index = 0
        self.latest = tick_message(self.engine.initial_record(), self.epoch, 0)

    # -- command ingress -------------------------------------------------

    def submit(self, cmd: str, value: float | None) -> dict:
        """Validate and enqueue a command; returns the ack payload."""
        if cmd not in COMMANDS:
            raise web.HTTPBadRequest(
                text=json.dumps({"error": f"unknown command {cmd!r}",
                                 "commands": list(COMMANDS)}),
                content_type="application/json",
            )
        if cmd == "set_human_power":
            limit = self.script.human.p_human_max
            if value is None or not 0.0 <= value <= limit:
                raise web.HTTPBadRequest(
                    text=json.dumps({"error": "value out of range",
                                     "valid_range": [0.0, limit]}),
                    content_type="application/json",
                )
        if cmd == "set_m_star":
            eta = self.script.controller.schedule.eta
            if value is None or not eta <= value <= 1.0:
                raise web.HTTPBadRequest(
                    text=json.dumps({"error": "value out of range",
                                     "valid_range": [eta, 1.0]}),
                    content_type="application/json",
                )
        applies_at = self.tick_index + 1
        self.mailbox.put_nowait({"cmd": cmd, "value": value, "tick": applies_at})
        return {"applied_tick": applies_at, "epoch": self.epoch}

    # -- tick loop --------------------------------------------------------

    def _apply(self, entry: dict) -> None:
        cmd, value = entry["cmd"], entry["value"]
        record = self.records[-1]
        record.commands.append(
            {"tick": self.tick_index + 1, "cmd": cmd, "value": value}
        )
        if cmd == "set_human_power":
            self.live_human = float(value)
        elif cmd == "set_m_star":
            self.live_m_star = float(value)
        elif cmd == "pause":
            self.paused = True
        elif cmd == "resume":
            self.paused = False
        elif cmd == "reset":
            self.epoch += 1
            self.records.append(EpochRecord(epoch=self.epoch))
            self.paused = False
            self._build_engine()
            self._broadcast({"type": "epoch", "epoch": self.epoch})
            assert self.latest is not None
            self._broadcast(self.latest)

    def _broadcast(self, msg: dict) -> None:
        for q in self.subscribers:
            if q.full():
                try:
                    q.get_nowait()  # drop oldest for this subscriber only
                except asyncio.QueueEmpty:
                    pass
            q.put_nowait(msg)

    async def run(self) -> None:
        dt_wall = self.script.controller.dt_sample / self.time_scale
        try:
            while True:
                await asyncio.sleep(dt_wall)
                reset_epoch = self.epoch
                while not self.mailbox.empty():
                    self._apply(self.mailbox.get_nowait())
                if self.paused or self.epoch != reset_epoch:
                    # a reset already emitted its fresh tick 0
                    continue
                t_next = (self.tick_index + 1) * self.script.controller.dt_sample
                m_star = (
                    self.live_m_star
                    if self.live_m_star is not None
                    else smooth_reference(self.script.reference, t_next)
                )
                rec = self.engine.step(self.live_human, m_star)
                self.tick_index += 1
                self.records[-1].tick_count = self.tick_index
                msg = tick_message(rec, self.epoch, self.tick_index)
                self.latest = msg
                self._broadcast(msg)
        except asyncio.CancelledError:
            raise

    def start(self) -> None:
        self._task = asyncio.get_running_loop().create_task(self.run())

    async def stop(self) -> None:
        if self._task is not None:
            self._task.cancel()
            try:
                await self._task
            except asyncio.CancelledError:
                pass

    def command_record(self) -> dict:
        return {
            "session_id": self.id,
            "time_scale": self.time_scale,
            "scenario_toml": dump_scenario(self.script),
            "epochs": [r.to_dict() for r in self.records],
        }


def replay_session_record(script: ScenarioScript, epoch_record: dict) -> list[TickRecord]:
    """Rebuild per-tick inputs from a command record and replay them.

    Returns the tick log of that epoch, bit-identical to what the live
    session streamed.
    """
    n = int(epoch_record["tick_count"])
    dt = script.controller.dt_sample
    by_tick: dict[int, list[dict]] = {}
    for c in epoch_record["commands"]:
        by_tick.setdefault(int(c["tick"]), []).append(c)
    human = [0.0]
    m_star = [smooth_reference(script.reference, 0.0)]
    live_h = 0.0
    live_m: float | None = None
    for k in range(1, n + 1):
        for c in by_tick.get(k, ()):
            if c["cmd"] == "set_human_power":
                live_h = float(c["value"])
            elif c["cmd"] == "set_m_star":
                live_m = float(c["value"])
        human.append(live_h)
        m_star.append(
            live_m if live_m is not None else smooth_reference(script.reference, k * dt)
        )
    return replay_inputs(script, human, m_star)


# -- HTTP/WS application ----------------------------------------------------


def create_app(
    base_script: ScenarioScript,
    time_scale: float = 1.0,
    max_sessions: int = DEFAULT_MAX_SESSIONS,
) -> web.Application:
    app = web.Application()
    app[BASE_SCRIPT_KEY] = base_script
    app[TIME_SCALE_KEY] = time_scale
    app[MAX_SESSIONS_KEY] = max_sessions
    app[SESSIONS_KEY] = {}

    app.router.add_get("/health", _health)
    app.router.add_post("/sessions", _create_session)
    app.router.add_post("/sessions/{sid}/command", _command)
    app.router.add_get("/sessions/{sid}/stream", _stream)
    app.router.add_get("/sessions/{sid}/commands", _download_record)
    app.router.add_delete("/sessions/{sid}", _delete_session)
    app.on_shutdown.append(_shutdown)
    return app


async def _shutdown(app: web.Application) -> None:
    for session in list(app[SESSIONS_KEY].values()):
        await session.stop()
    app[SESSIONS_KEY].clear()


async def _health(request: web.Request) -> web.Response:
    return web.json_response(
        {"version": __version__, "active_sessions": len(request.app[SESSIONS_KEY])}
    )


async def _create_session(request: web.Request) -> web.Response:
    app = request.app
    if len(app[SESSIONS_KEY]) >= app[MAX_SESSIONS_KEY]:
        return web.json_response(
            {"error": "capacity exceeded",
             "reason": f"at most {app[MAX_SESSIONS_KEY]} concurrent sessions"},
            status=503,
        )
    script = app[BASE_SCRIPT_KEY]
    time_scale = app[TIME_SCALE_KEY]
    if request.can_read_body:
        body = await request.json()
        if "scenario" in body or any(
            k in body for k in ("controller", "schedule", "plant", "human")
        ):
            try:
                script = scenario_from_dict(body, default_name="live")
            except (ValueError, TypeError, KeyError) as exc:
                return web.json_response({"error": str(exc)}, status=400)
        if "time_scale" in body:
            time_scale = float(body["time_scale"])
            if not 0.0 < time_scale <= 1000.0:
                return web.json_response(
                    {"error": "time_scale out of range", "valid_range": [0, 1000]},
                    status=400,
                )
    session = Session(script, time_scale)
    app[SESSIONS_KEY][session.id] = session
    session.start()
    return web.json_response(
        {
            "session_id": session.id,
            "epoch": session.epoch,
            "dt_sample": script.controller.dt_sample,
            "p_human_max": script.human.p_human_max,
            "eta": script.controller.schedule.eta,
            "stream_path": f"/sessions/{session.id}/stream",
        }
    )


def _get_session(request: web.Request) -> Session:
    sid = request.match_info["sid"]
    session = request.app[SESSIONS_KEY].get(sid)
    if session is None:
        raise web.HTTPNotFound(
            text=json.dumps({"error": f"unknown session {sid!r}"}),
            content_type="application/json",
        )
    return session


async def _command(request: web.Request) -> web.Response:
    session = _get_session(request)
    body = await request.json()
    cmd = body.get("cmd")
    value = body.get("value")
    ack = session.submit(cmd, float(value) if value is not None else None)
    return web.json_response(ack)


async def _download_record(request: web.Request) -> web.Response:
    session = _get_session(request)
    return web.json_response(session.command_record())


async def _delete_session(request: web.Request) -> web.Response:
    session = _get_session(request)
    await session.stop()
    del request.app[SESSIONS_KEY][session.id]
    return web.json_response({"stopped": session.id})


async def _stream(request: web.Request) -> web.WebSocketResponse:
    session = _get_session(request)
    ws = web.WebSocketResponse(heartbeat=30.0)
    await ws.prepare(request)

    queue: asyncio.Queue = asyncio.Queue(maxsize=_SUBSCRIBER_QUEUE_SIZE)
    session.subscribers.add(queue)
    try:
        hello = {
            "type": "hello",
            "session_id": session.id,
            "epoch": session.epoch,
            "latest_index": session.tick_index,
            "dt_sample": session.script.controller.dt_sample,
            "p_human_max": session.script.human.p_human_max,
            "eta": session.script.controller.schedule.eta,
        }
        await ws.send_str(json.dumps(hello))
        if session.latest is not None:
            await ws.send_str(json.dumps(session.latest))

        async def pump() -> None:
            while True:
                msg = await queue.get()
                await ws.send_str(json.dumps(msg))

        pump_task = asyncio.get_running_loop().create_task(pump())
        try:
            async for msg in ws:
                if msg.type in (WSMsgType.ERROR, WSMsgType.CLOSE):
                    break
                # inbound text on the stream socket is ignored; commands go
                # through the HTTP endpoint so their ordering is recorded
        finally:
            pump_task.cancel()
            try:
                await pump_task
            except asyncio.CancelledError:
                pass
    finally:
        session.subscribers.discard(queue)
        if not ws.closed:
            await ws.close()
    return ws


def serve(
    script: ScenarioScript,
    host: str = "127.0.0.1",
    port: int = 8700,
    time_scale: float = 1.0,
) -> None:
    """Run the service until interrupted."""
    logging.basicConfig(level=logging.INFO)
    app = create_app(script, time_scale=time_scale)
    log.info("serving %s on %s:%d (time_scale=%g)", script.name, host, port, time_scale)
    web.run_app(app, host=host, port=port)
