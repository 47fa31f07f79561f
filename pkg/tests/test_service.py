"""Live service: sessions, commands, streaming, replay identity."""

import asyncio
import json

import pytest
from aiohttp.test_utils import TestClient, TestServer

from pedelec import ScenarioScript, get_builtin, log_to_csv
from pedelec.config import scenario_from_dict

try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib

from pedelec.service import create_app, replay_session_record

TIME_SCALE = 200.0  # 5 ms wall clock per 1 s simulated


def run(coro):
    return asyncio.run(coro)


async def make_client(max_sessions=8):
    app = create_app(get_builtin("fig3_disturbance"), time_scale=TIME_SCALE,
                     max_sessions=max_sessions)
    client = TestClient(TestServer(app))
    await client.start_server()
    return client


async def read_until(ws, predicate, limit=400):
    """Read stream messages until predicate matches; returns the match."""
    for _ in range(limit):
        msg = json.loads((await ws.receive(timeout=5.0)).data)
        if predicate(msg):
            return msg
    raise AssertionError("no matching message within limit")


class TestSessions:
    def test_health(self):
        async def main():
            client = await make_client()
            try:
                resp = await client.get("/health")
                body = await resp.json()
                assert resp.status == 200
                assert body["active_sessions"] == 0
                assert "version" in body
            finally:
                await client.close()

        run(main())

    def test_create_and_first_tick(self):
        async def main():
            client = await make_client()
            try:
                resp = await client.post("/sessions")
                info = await resp.json()
                assert resp.status == 200
                sid = info["session_id"]
                ws = await client.ws_connect(f"/sessions/{sid}/stream")
                hello = json.loads((await ws.receive(timeout=5.0)).data)
                assert hello["type"] == "hello"
                first = json.loads((await ws.receive(timeout=5.0)).data)
                assert first["type"] == "tick"
                assert first["index"] >= 0
                assert first["t"] == first["index"] * info["dt_sample"]
                await ws.close()
            finally:
                await client.close()

        run(main())

    def test_two_sessions_independent(self):
        async def main():
            client = await make_client()
            try:
                a = await (await client.post("/sessions")).json()
                b = await (await client.post("/sessions")).json()
                assert a["session_id"] != b["session_id"]
                await client.post(
                    f"/sessions/{a['session_id']}/command",
                    json={"cmd": "set_human_power", "value": 150.0},
                )
                await asyncio.sleep(0.1)
                rec_a = await (
                    await client.get(f"/sessions/{a['session_id']}/commands")
                ).json()
                rec_b = await (
                    await client.get(f"/sessions/{b['session_id']}/commands")
                ).json()
                assert rec_a["epochs"][0]["commands"]
                assert not rec_b["epochs"][0]["commands"]
            finally:
                await client.close()

        run(main())

    def test_capacity_refusal(self):
        async def main():
            client = await make_client(max_sessions=1)
            try:
                assert (await client.post("/sessions")).status == 200
                resp = await client.post("/sessions")
                assert resp.status == 503
                assert "reason" in await resp.json()
            finally:
                await client.close()

        run(main())

    def test_invalid_config_no_session(self):
        async def main():
            client = await make_client()
            try:
                resp = await client.post(
                    "/sessions",
                    json={"scenario": {"duration": -5.0},
                          "reference": {"knots": [[0.0, 0.5, "hold"]]}},
                )
                assert resp.status == 400
                health = await (await client.get("/health")).json()
                assert health["active_sessions"] == 0
            finally:
                await client.close()

        run(main())


class TestCommands:
    def test_set_human_power_applies_next_tick(self):
        async def main():
            client = await make_client()
            try:
                info = await (await client.post("/sessions")).json()
                sid = info["session_id"]
                resp = await client.post(
                    f"/sessions/{sid}/command",
                    json={"cmd": "set_human_power", "value": 200.0},
                )
                ack = await resp.json()
                ws = await client.ws_connect(f"/sessions/{sid}/stream")
                msg = await read_until(
                    ws, lambda m: m.get("type") == "tick"
                    and m["index"] >= ack["applied_tick"]
                )
                assert msg["p_human_raw"] == 200.0
                await ws.close()
            finally:
                await client.close()

        run(main())

    def test_out_of_range_rejected_with_range(self):
        async def main():
            client = await make_client()
            try:
                info = await (await client.post("/sessions")).json()
                sid = info["session_id"]
                resp = await client.post(
                    f"/sessions/{sid}/command",
                    json={"cmd": "set_m_star", "value": 0.05},
                )
                assert resp.status == 400
                body = await resp.json()
                assert body["valid_range"][0] == info["eta"]
                resp = await client.post(
                    f"/sessions/{sid}/command",
                    json={"cmd": "set_human_power", "value": 1e6},
                )
                assert resp.status == 400
            finally:
                await client.close()

        run(main())

    def test_unknown_session(self):
        async def main():
            client = await make_client()
            try:
                resp = await client.post(
                    "/sessions/deadbeef/command", json={"cmd": "pause"}
                )
                assert resp.status == 404
            finally:
                await client.close()

        run(main())

    def test_pause_resume_no_ticks_lost(self):
        async def main():
            client = await make_client()
            try:
                info = await (await client.post("/sessions")).json()
                sid = info["session_id"]
                await asyncio.sleep(0.05)
                await client.post(f"/sessions/{sid}/command", json={"cmd": "pause"})
                await asyncio.sleep(0.1)
                await client.post(f"/sessions/{sid}/command", json={"cmd": "resume"})
                await asyncio.sleep(0.05)
                ws = await client.ws_connect(f"/sessions/{sid}/stream")
                seen = []
                for _ in range(6):
                    msg = json.loads((await ws.receive(timeout=5.0)).data)
                    if msg.get("type") == "tick":
                        seen.append(msg)
                indices = [m["index"] for m in seen]
                # strictly increasing by exactly one: no gaps across pause
                assert all(b == a + 1 for a, b in zip(indices[1:], indices[2:]))
                dt = info["dt_sample"]
                assert all(m["t"] == m["index"] * dt for m in seen)
                await ws.close()
            finally:
                await client.close()

        run(main())

    def test_reset_restarts_epoch(self):
        async def main():
            client = await make_client()
            try:
                info = await (await client.post("/sessions")).json()
                sid = info["session_id"]
                ws = await client.ws_connect(f"/sessions/{sid}/stream")
                await read_until(
                    ws, lambda m: m.get("type") == "tick" and m["index"] >= 3
                )
                await client.post(f"/sessions/{sid}/command", json={"cmd": "reset"})
                marker = await read_until(ws, lambda m: m.get("type") == "epoch")
                assert marker["epoch"] == 1
                fresh = await read_until(
                    ws, lambda m: m.get("type") == "tick" and m["epoch"] == 1
                )
                assert fresh["index"] == 0
                await ws.close()
            finally:
                await client.close()

        run(main())


class TestStream:
    def test_indices_strictly_increasing(self):
        async def main():
            client = await make_client()
            try:
                info = await (await client.post("/sessions")).json()
                sid = info["session_id"]
                ws = await client.ws_connect(f"/sessions/{sid}/stream")
                ticks = []
                while len(ticks) < 8:
                    msg = json.loads((await ws.receive(timeout=5.0)).data)
                    if msg.get("type") == "tick":
                        ticks.append(msg["index"])
                assert all(b > a for a, b in zip(ticks, ticks[1:]))
                await ws.close()
            finally:
                await client.close()

        run(main())

    def test_reconnect_resumes_from_latest(self):
        async def main():
            client = await make_client()
            try:
                info = await (await client.post("/sessions")).json()
                sid = info["session_id"]
                ws = await client.ws_connect(f"/sessions/{sid}/stream")
                first = await read_until(ws, lambda m: m.get("type") == "tick")
                await ws.close()
                await asyncio.sleep(0.1)
                ws2 = await client.ws_connect(f"/sessions/{sid}/stream")
                hello = json.loads((await ws2.receive(timeout=5.0)).data)
                snapshot = json.loads((await ws2.receive(timeout=5.0)).data)
                assert snapshot["type"] == "tick"
                assert snapshot["index"] >= first["index"]
                assert hello["latest_index"] == snapshot["index"]
                await ws2.close()
            finally:
                await client.close()

        run(main())

    def test_message_round_trips_losslessly(self):
        async def main():
            client = await make_client()
            try:
                info = await (await client.post("/sessions")).json()
                sid = info["session_id"]
                await client.post(
                    f"/sessions/{sid}/command",
                    json={"cmd": "set_human_power", "value": 123.456},
                )
                ws = await client.ws_connect(f"/sessions/{sid}/stream")
                msg = await read_until(
                    ws, lambda m: m.get("type") == "tick" and m["p_human_raw"] > 0
                )
                again = json.loads(json.dumps(msg))
                assert again == msg
                await ws.close()
            finally:
                await client.close()

        run(main())


class TestReplay:
    def test_command_record_replays_bit_identically(self):
        async def main():
            client = await make_client()
            try:
                info = await (await client.post("/sessions")).json()
                sid = info["session_id"]
                ws = await client.ws_connect(f"/sessions/{sid}/stream")
                streamed = {}

                async def collect(n):
                    while len(streamed) < n:
                        msg = json.loads((await ws.receive(timeout=5.0)).data)
                        if msg.get("type") == "tick":
                            streamed[msg["index"]] = msg

                await collect(3)
                for value in (120.0, 180.0, 60.0):
                    await client.post(
                        f"/sessions/{sid}/command",
                        json={"cmd": "set_human_power", "value": value},
                    )
                    await collect(len(streamed) + 4)
                await client.post(
                    f"/sessions/{sid}/command",
                    json={"cmd": "set_m_star", "value": 0.5},
                )
                await collect(len(streamed) + 6)
                await ws.close()

                record = await (
                    await client.get(f"/sessions/{sid}/commands")
                ).json()
                script = scenario_from_dict(
                    tomllib.loads(record["scenario_toml"])
                )
                log = replay_session_record(script, record["epochs"][0])
                from pedelec.service import tick_message

                for idx, msg in streamed.items():
                    if idx < len(log):
                        expected = tick_message(log[idx], 0, idx)
                        assert expected == msg, f"tick {idx} differs"
            finally:
                await client.close()

        run(main())
