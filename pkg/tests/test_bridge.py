import json
import math
import time

import pytest

from chainmover.bridge import (SCHEMA_VERSION, BridgeClient, BridgeServer,
                               SimSession, dumps_message, recorded_states,
                               replay_log, run_headless)
from chainmover.demos import DemoIndex, generate_demos, save_demos
from chainmover.errors import LogVersionError
from chainmover.geometry import Twist2
from chainmover.sim import ACTION_HIGH, EnvConfig


@pytest.fixture(scope="module")
def index():
    return DemoIndex(generate_demos("chair", 3, seed=0))


def make_session(index, **kw) -> SimSession:
    return SimSession(EnvConfig(), index, seed=3, controller="oracle", **kw)


# --------------------------------------------------------------------------
# Headless session semantics
# --------------------------------------------------------------------------

def test_state_message_schema(index):
    s = make_session(index)
    msg = json.loads(s.step())
    assert msg["type"] == "state"
    assert msg["schema"] == SCHEMA_VERSION
    assert msg["step"] == 1
    assert msg["t"] == pytest.approx(0.05)
    assert msg["mode"] == "policy"
    assert set(msg["object"]) == {"x", "y", "yaw", "vx", "vy", "omega"}
    r = msg["robots"][0]
    assert len(r["arm_q"]) == 3 and len(r["arm_dq"]) == 3
    # zero command, no grasp load yet: the overlay chain is empty
    assert msg["robot_chain"] == []
    assert len(msg["demo_chain"]) == 5
    # once a twist is commanded the grasp loads up and the overlay appears
    s.apply_command({"type": "set_target_twist", "vx": 0.3, "vy": 0.0,
                     "omega": 0.0})
    for _ in range(10):
        loaded = json.loads(s.step())
    assert len(loaded["robot_chain"]) == 5
    assert set(msg["reward"]) == {"total", "r_imi", "err_c"}
    assert msg["metrics"]["steps"] == 1
    s.close()


def test_set_target_twist_applies_and_clamps(index):
    s = make_session(index)
    assert s.apply_command({"type": "set_target_twist",
                            "vx": 0.2, "vy": 0.0, "omega": 0.1}) is None
    assert s.env.target == Twist2(0.2, 0.0, 0.1)
    s.apply_command({"type": "set_target_twist", "vx": 99.0, "vy": 0.0,
                     "omega": -99.0})
    assert s.env.target.vx == ACTION_HIGH[0]
    assert s.env.target.omega == -ACTION_HIGH[2]
    s.close()


def test_unknown_command_returns_error_reply(index):
    s = make_session(index)
    err = s.apply_command({"type": "self_destruct"})
    assert err["type"] == "error"
    assert "self_destruct" in err["message"]
    # the session is still usable afterwards
    assert s.apply_command({"type": "pause"}) is None
    assert s.paused
    s.close()


def test_pause_skips_stepping(index):
    s = make_session(index)
    out = run_headless(s, {0: [{"type": "pause"}], 6: [{"type": "resume"}]}, 10)
    assert len(out) == 4  # steps 0-5 paused, 6-9 ran
    assert s.step_count == 4
    s.close()


def test_cookbook_command_drives_target(index):
    s = make_session(index)
    s.apply_command({"type": "cookbook", "name": "forward-slow"})
    s.step()
    assert s.env.target == Twist2(0.2, 0.0, 0.0)
    n = len(s.cookbook_queue)
    for _ in range(n):
        s.step()
    assert s.env.target == Twist2(0.0, 0.0, 0.0)  # trailing stop step
    err = s.apply_command({"type": "cookbook", "name": "moonwalk"})
    assert err["type"] == "error"
    s.close()


def test_goal_command_engages_planner_and_clears_on_arrival(index):
    s = make_session(index)
    p = s.env.world.obj.pose
    s.apply_command({"type": "set_goal", "x": p.x + 0.3, "y": p.y,
                     "yaw": p.yaw})
    for _ in range(400):
        s.step()
        if s.goal is None:
            break
    assert s.goal is None
    assert s.env.target == Twist2(0.0, 0.0, 0.0)
    assert math.hypot(s.env.world.obj.pose.x - (p.x + 0.3),
                      s.env.world.obj.pose.y - p.y) < 0.2
    s.close()


def test_teleop_mode_drives_root_directly(index):
    s = make_session(index)
    s.apply_command({"type": "teleop", "enabled": True})
    s.apply_command({"type": "set_target_twist", "vx": 0.3, "vy": 0.0,
                     "omega": 0.0})
    assert s.teleop_twist == Twist2(0.3, 0.0, 0.0)
    x0 = s.env.world.robot.root.x
    for _ in range(20):
        s.step()
    assert s.env.world.robot.root.x > x0 + 0.1
    s.apply_command({"type": "teleop", "enabled": False})
    assert s.mode == "policy"
    s.close()


def test_reset_command_reseeds(index):
    s = make_session(index)
    for _ in range(5):
        s.step()
    s.apply_command({"type": "reset", "seed": 3})
    first = s.step()
    s2 = make_session(index)
    assert json.loads(first)["object"] == json.loads(s2.step())["object"]
    s2.close()
    s.close()


# --------------------------------------------------------------------------
# Record / replay
# --------------------------------------------------------------------------

SCRIPT = {
    2: [{"type": "set_target_twist", "vx": 0.2, "vy": 0.0, "omega": 0.0}],
    10: [{"type": "cookbook", "name": "turn-left"}],
    20: [{"type": "set_target_twist", "vx": 0.0, "vy": 0.0, "omega": 0.2}],
}


def test_record_then_replay_byte_identical(tmp_path, index):
    demo_dir = str(tmp_path / "demos")
    save_demos(generate_demos("chair", 3, seed=0), demo_dir, seed=0)
    log = str(tmp_path / "session.log")
    s = SimSession(EnvConfig(), index, seed=3, controller="oracle",
                   demo_dir=demo_dir, record_path=log)
    live = run_headless(s, SCRIPT, 30)
    s.close()
    assert recorded_states(log) == live
    assert replay_log(log) == live  # regenerated, not copied


def test_replay_rejects_bad_logs(tmp_path, index):
    p = tmp_path / "bad.log"
    p.write_text("")
    with pytest.raises(ValueError):
        replay_log(str(p), index)
    p.write_text('{"type": "state"}\n')
    with pytest.raises(ValueError, match="header"):
        replay_log(str(p), index)
    import dataclasses
    header = {"type": "header", "schema": 999, "seed": 0, "controller": "oracle",
              "demo_dir": None, "env_cfg": dataclasses.asdict(EnvConfig())}
    p.write_text(dumps_message(header) + "\n")
    with pytest.raises(LogVersionError):
        replay_log(str(p), index)
    header["schema"] = SCHEMA_VERSION
    p.write_text(dumps_message(header) + "\n" + '{"type": "state"'  + "\n")
    with pytest.raises(ValueError, match="truncated or corrupt"):
        replay_log(str(p), index)


# --------------------------------------------------------------------------
# WebSocket server
# --------------------------------------------------------------------------

@pytest.fixture()
def server(index):
    session = make_session(index)
    session.paused = True  # clients resume explicitly; no states are lost
    srv = BridgeServer(session, port=0, pace=0.0)
    srv.start()
    yield srv
    srv.stop()


def test_bridged_stream_matches_headless(server, index):
    client = BridgeClient("127.0.0.1", server.port)
    client.send({"type": "resume"})
    bridged = [client.recv_text() for _ in range(20)]
    client.send({"type": "pause"})
    client.close()
    headless = run_headless(make_session(index), {}, 20)
    assert bridged == headless


def test_command_latency_at_most_one_step(server):
    client = BridgeClient("127.0.0.1", server.port)
    client.send({"type": "set_target_twist", "vx": 0.25, "vy": 0.0,
                 "omega": 0.0})
    time.sleep(0.2)
    client.send({"type": "resume"})
    state = client.recv_state()
    # the command sent while paused is reflected in the very next state
    assert state["step"] == 1
    assert state["command"] == {"vx": 0.25, "vy": 0.0, "omega": 0.0}
    client.send({"type": "pause"})
    client.close()


def test_malformed_and_unknown_messages_get_error_replies(server):
    client = BridgeClient("127.0.0.1", server.port)
    import chainmover.ws as ws
    ws.send_text(client.sock, "{not json", mask=True)
    assert client.recv()["type"] == "error"
    client.send({"type": "warp_drive"})
    assert client.recv()["type"] == "error"
    client.close()


def test_observer_connections_are_read_only(server):
    first = BridgeClient("127.0.0.1", server.port)
    time.sleep(0.1)
    second = BridgeClient("127.0.0.1", server.port)
    time.sleep(0.1)
    second.send({"type": "resume"})
    reply = second.recv()
    assert reply["type"] == "error"
    assert "read-only" in reply["message"]
    assert server.session.paused  # the observer could not unpause
    # ... but the interactive client can, and both receive the stream
    first.send({"type": "resume"})
    a = first.recv_state()
    b = second.recv_state()
    assert a["step"] == b["step"] == 1
    first.send({"type": "pause"})
    first.close()
    second.close()
