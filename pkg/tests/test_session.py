"""Room protocol state machine: transitions, invariants, convergence.

The simulation harness here runs entirely in memory: scripted clients
produce messages, the machine processes them in one receipt order, and
ClientReplica instances consume the emitted deliveries. The replay
oracle re-runs the same receipt order and compares final states.
"""

import json

import numpy as np
import pytest

from hyperviz import (
    Annotation,
    ClientReplica,
    ProtocolMessage,
    Viewpoint,
    ViewpointThrottle,
    decode_message,
    handle_message,
    initial_state,
    snapshot,
)
from hyperviz.session import (
    ERR_BAD_PAYLOAD,
    ERR_BUSY,
    ERR_NOT_IN_ROOM,
    ERR_NOT_NAVIGATOR,
    server_state_tuple,
)


def msg(type, seq=0, **payload):
    return ProtocolMessage(type, seq, payload)


def run(state, *steps, resolver=None):
    """Apply (sender, message) steps; returns final state and all events."""
    all_events = []
    for sender, m in steps:
        state, events = handle_message(state, sender, m, link_resolver=resolver)
        all_events.extend(events)
    return state, all_events


def vp(x=0.5, fov=60.0):
    return {
        "position": [x, 0.5, 0.5],
        "orientation": [1.0, 0.0, 0.0, 0.0],
        "field_of_view": fov,
    }


# --- basic transitions --------------------------------------------------

def test_join_empty_room():
    state, events = handle_message(initial_state("r"), "a", msg("join"))
    assert list(state.users) == ["a"]
    (recipients, welcome), = events
    assert recipients == {"a"}
    assert welcome.type == "welcome"
    assert welcome.payload["mapping_version"] == 0
    assert welcome.payload["annotations"] == []
    assert welcome.payload["broadcast_navigator"] is None
    assert "a" in welcome.payload["users"]


def test_join_notifies_others():
    state, _ = run(initial_state("r"), ("a", msg("join")))
    state, events = handle_message(state, "b", msg("join"))
    types = {(frozenset(r), m.type) for r, m in events}
    assert (frozenset({"b"}), "welcome") in types
    assert (frozenset({"a"}), "user_joined") in types


def test_duplicate_join_rejected():
    state, _ = run(initial_state("r"), ("a", msg("join")))
    state, events = handle_message(state, "a", msg("join"))
    assert events[0][1].type == "error"
    assert events[0][1].payload["code"] == ERR_BAD_PAYLOAD


def test_sender_not_in_room():
    state, events = handle_message(initial_state("r"), "ghost", msg("annotate"))
    assert events[0][1].payload["code"] == ERR_NOT_IN_ROOM


def test_unknown_type_bad_payload():
    state, _ = run(initial_state("r"), ("a", msg("join")))
    _, events = handle_message(state, "a", msg("frobnicate"))
    assert events[0][1].payload["code"] == ERR_BAD_PAYLOAD


def test_leave_removes_user():
    state, _ = run(initial_state("r"), ("a", msg("join")), ("b", msg("join")))
    state, events = handle_message(state, "a", msg("leave"))
    assert list(state.users) == ["b"]
    (recipients, m), = events
    assert m.type == "user_left" and recipients == {"b"}


def test_set_mapping_bumps_version_and_broadcasts():
    state, _ = run(initial_state("r"), ("a", msg("join")), ("b", msg("join")))
    m = {"channels": {"pos_x": {"column": "c"}}}
    state, events = handle_message(state, "a", msg("set_mapping", mapping=m))
    assert state.mapping_version == 1
    (recipients, out), = events
    assert recipients == {"a", "b"}
    assert out.type == "mapping_changed"
    assert out.payload["mapping_version"] == 1
    assert out.payload["mapping"]["version"] == 1
    assert out.payload["changed_by"] == "a"


def test_set_mapping_twice_version_two():
    state, _ = run(initial_state("r"), ("a", msg("join")))
    m = {"channels": {"pos_x": {"column": "c"}}}
    state, _ = run(
        state,
        ("a", msg("set_mapping", mapping=m)),
        ("a", msg("set_mapping", mapping=m)),
    )
    assert state.mapping_version == 2


def test_bad_mapping_payload_no_version_bump():
    state, _ = run(initial_state("r"), ("a", msg("join")))
    state, events = handle_message(state, "a", msg("set_mapping", mapping=["nope"]))
    assert events[0][1].payload["code"] == ERR_BAD_PAYLOAD
    assert state.mapping_version == 0


def test_mapping_validator_rejection_no_bump():
    def reject(mapping):
        raise ValueError("no such column")

    state, _ = run(initial_state("r"), ("a", msg("join")))
    state, events = handle_message(
        state,
        "a",
        msg("set_mapping", mapping={"channels": {"pos_x": {"column": "zz"}}}),
        mapping_validator=reject,
    )
    assert events[0][1].payload["code"] == ERR_BAD_PAYLOAD
    assert state.mapping_version == 0


def test_viewpoint_stored_not_broadcast():
    state, _ = run(initial_state("r"), ("a", msg("join")), ("b", msg("join")))
    state, events = handle_message(state, "b", msg("viewpoint", viewpoint=vp(0.9)))
    assert events == []
    assert state.users["b"].position[0] == 0.9


def test_broadcast_cycle():
    state, _ = run(initial_state("r"), ("a", msg("join")), ("b", msg("join")))
    state, events = handle_message(state, "a", msg("broadcast_start"))
    assert state.broadcast_navigator == "a"
    assert events[0][1].type == "broadcast_started"
    assert events[0][0] == {"a", "b"}

    state, events = handle_message(state, "a", msg("viewpoint", seq=5, viewpoint=vp(0.7)))
    (recipients, bcast), = events
    assert bcast.type == "viewpoint_bcast"
    assert recipients == {"b"}
    assert bcast.payload["source_seq"] == 5
    assert bcast.payload["viewpoint"]["position"][0] == 0.7

    # follower viewpoints are stored silently
    state, events = handle_message(state, "b", msg("viewpoint", viewpoint=vp(0.1)))
    assert events == []

    # contention rejected
    state, events = handle_message(state, "b", msg("broadcast_start"))
    assert events[0][1].payload["code"] == ERR_BUSY
    assert state.broadcast_navigator == "a"

    state, events = handle_message(state, "b", msg("broadcast_stop"))
    assert events[0][1].payload["code"] == ERR_NOT_NAVIGATOR

    state, events = handle_message(state, "a", msg("broadcast_stop"))
    assert state.broadcast_navigator is None
    assert events[0][1].type == "broadcast_stopped"


def test_navigator_leave_stops_broadcast_first():
    state, _ = run(
        initial_state("r"),
        ("a", msg("join")),
        ("b", msg("join")),
        ("a", msg("broadcast_start")),
    )
    state, events = handle_message(state, "a", msg("leave"))
    assert state.broadcast_navigator is None
    assert [m.type for _, m in events] == ["broadcast_stopped", "user_left"]


def test_annotations_sequence():
    state, _ = run(initial_state("r"), ("a", msg("join")))
    for i in range(3):
        state, events = handle_message(
            state, "a", msg("annotate", row_id=i, text=f"note {i}")
        )
        assert events[0][1].type == "annotation_added"
    assert [a.server_seq for a in state.annotations] == [1, 2, 3]
    assert [a.row_id for a in state.annotations] == [0, 1, 2]


def test_annotation_validation():
    state, _ = run(initial_state("r"), ("a", msg("join")))
    _, events = handle_message(state, "a", msg("annotate", row_id=-1, text="x"))
    assert events[0][1].payload["code"] == ERR_BAD_PAYLOAD
    _, events = handle_message(state, "a", msg("annotate", row_id=0, text="é" * 513))
    assert events[0][1].payload["code"] == ERR_BAD_PAYLOAD
    state, events = handle_message(state, "a", msg("annotate", row_id=0, text="é" * 512))
    assert events[0][1].type == "annotation_added"


def test_pick_link_resolves_to_sender_only():
    state, _ = run(initial_state("r"), ("a", msg("join")), ("b", msg("join")))
    state, events = handle_message(
        state, "a", msg("pick_link", row_id=4), link_resolver=lambda r: f"http://db/{r}"
    )
    (recipients, link), = events
    assert recipients == {"a"}
    assert link.payload == {"row_id": 4, "url": "http://db/4", "mapping_version": 0}


def test_pick_link_resolver_failure():
    def boom(row):
        raise IndexError("row gone")

    state, _ = run(initial_state("r"), ("a", msg("join")))
    _, events = handle_message(state, "a", msg("pick_link", row_id=4), link_resolver=boom)
    assert events[0][1].payload["code"] == ERR_BAD_PAYLOAD


def test_every_server_message_carries_version():
    state = initial_state("r")
    senders = ["a", "b", "c"]
    script = [(s, msg("join")) for s in senders]
    script += [
        ("a", msg("set_mapping", mapping={"channels": {"pos_x": {"column": "x"}}})),
        ("b", msg("annotate", row_id=1, text="t")),
        ("b", msg("broadcast_start")),
        ("b", msg("viewpoint", viewpoint=vp(0.2))),
        ("c", msg("broadcast_start")),
        ("b", msg("leave")),
        ("ghost", msg("viewpoint", viewpoint=vp())),
    ]
    state, events = run(state, *script)
    assert len(events) > 0
    for _, m in events:
        assert "mapping_version" in m.payload


def test_viewpoint_quaternion_validation():
    state, _ = run(initial_state("r"), ("a", msg("join")))
    bad = {"position": [0, 0, 0], "orientation": [2.0, 0, 0, 0], "field_of_view": 60}
    _, events = handle_message(state, "a", msg("viewpoint", viewpoint=bad))
    assert events[0][1].payload["code"] == ERR_BAD_PAYLOAD
    with pytest.raises(ValueError):
        Viewpoint((0, 0, 0), (1, 0, 0, 0), field_of_view=5.0)
    with pytest.raises(ValueError):
        Viewpoint((0, 0, 0), (1, 0, 0, 0), field_of_view=170.0)


def test_wire_encoding_roundtrip():
    m = ProtocolMessage("annotate", 7, {"row_id": 1, "text": "x"})
    again = decode_message(m.to_wire())
    assert again == m


def test_wire_unknown_fields_ignored():
    m = decode_message(json.dumps({"type": "join", "seq": 1, "payload": {}, "extra": 9}))
    assert m.type == "join"


def test_wire_malformed_rejected():
    for text in ("not json", "[1,2]", '{"seq": 1}', '{"type": "x", "payload": 3}'):
        with pytest.raises(ValueError):
            decode_message(text)


# --- snapshot ----------------------------------------------------------

def test_snapshot_fresh_room():
    snap = snapshot(initial_state("r"))
    assert snap["mapping"]["version"] == 0
    assert snap["annotations"] == []
    assert snap["users"] == {}
    assert snap["broadcast_navigator"] is None


def test_snapshot_annotations_in_seq_order():
    state, _ = run(initial_state("r"), ("a", msg("join")))
    for i in range(5):
        state, _ = run(state, ("a", msg("annotate", row_id=i, text="t")))
    snap = snapshot(state)
    assert [a["server_seq"] for a in snap["annotations"]] == [1, 2, 3, 4, 5]


def test_snapshot_includes_active_broadcast():
    state, _ = run(
        initial_state("r"), ("a", msg("join")), ("a", msg("broadcast_start"))
    )
    assert snapshot(state)["broadcast_navigator"] == "a"


# --- simulation harness -------------------------------------------------

MAPPINGS = [
    {"channels": {"pos_x": {"column": "x"}}},
    {"channels": {"pos_y": {"column": "y"}, "color": {"column": "c"}}},
    {"channels": {}},
]


def random_script(rng, users, n_messages):
    """Mixed workload with joins, contention, and navigator departures."""
    script = []
    seqs = dict.fromkeys(users, 0)
    for _ in range(n_messages):
        sender = users[int(rng.integers(0, len(users)))]
        seqs[sender] += 1
        roll = rng.random()
        if roll < 0.18:
            m = msg("join", seqs[sender])
        elif roll < 0.28:
            m = msg("leave", seqs[sender])
        elif roll < 0.43:
            m = msg(
                "set_mapping",
                seqs[sender],
                mapping=MAPPINGS[int(rng.integers(0, len(MAPPINGS)))],
            )
        elif roll < 0.63:
            m = msg("viewpoint", seqs[sender], viewpoint=vp(float(rng.random())))
        elif roll < 0.73:
            m = msg("broadcast_start", seqs[sender])
        elif roll < 0.80:
            m = msg("broadcast_stop", seqs[sender])
        elif roll < 0.93:
            m = msg(
                "annotate",
                seqs[sender],
                row_id=int(rng.integers(0, 100)),
                text=f"note {int(rng.integers(0, 10))}",
            )
        else:
            m = msg("pick_link", seqs[sender], row_id=int(rng.integers(0, 100)))
        script.append((sender, m))
    return script


class Simulation:
    """Server plus per-user replicas wired through the machine's output.

    Checks the protocol invariants after every message: at most one
    navigator and the navigator is a member; and each follower displays
    exactly the last navigator viewpoint delivered to it.
    """

    def __init__(self, users, room="r"):
        self.state = initial_state(room)
        self.replicas = {u: ClientReplica(u) for u in users}
        self.last_bcast_delivered = {u: None for u in users}
        self.navigator_history = []

    def apply(self, sender, message):
        self.state, events = handle_message(
            self.state, sender, message, link_resolver=lambda r: f"http://db/{r}"
        )
        for recipients, m in events:
            for uid in recipients:
                if uid in self.replicas:
                    self.replicas[uid].apply(m)
                    if m.type == "viewpoint_bcast":
                        self.last_bcast_delivered[uid] = m.payload["viewpoint"]
                    elif m.type in ("broadcast_stopped", "welcome"):
                        self.last_bcast_delivered[uid] = None
        self.navigator_history.append(self.state.broadcast_navigator)
        nav = self.state.broadcast_navigator
        assert nav is None or nav in self.state.users
        for uid, rep in self.replicas.items():
            assert rep.displayed_viewpoint == self.last_bcast_delivered[uid]
            if rep.broadcast_navigator is not None and rep.displayed_viewpoint:
                assert rep.broadcast_navigator in rep.users


def test_replay_identical_final_state(rng):
    users = [f"u{i}" for i in range(5)]
    script = random_script(rng, users, 200)
    sim1, sim2 = Simulation(users), Simulation(users)
    for sender, m in script:
        sim1.apply(sender, m)
        sim2.apply(sender, m)
    assert server_state_tuple(sim1.state) == server_state_tuple(sim2.state)
    assert sim1.state == sim2.state


def test_convergence_after_quiescence(rng):
    users = [f"u{i}" for i in range(5)]
    for seed in range(20):
        local = np.random.default_rng(seed)
        sim = Simulation(users)
        for sender, m in random_script(local, users, 200):
            sim.apply(sender, m)
        # ensure everyone is joined at the end so replicas are complete
        for u in users:
            if u not in sim.state.users:
                sim.apply(u, msg("join", 999))
        server = server_state_tuple(sim.state)
        for u in users:
            assert sim.replicas[u].state_tuple() == server, f"seed {seed} user {u}"


def test_late_joiner_equals_observer():
    observer, late = "obs", "late"
    sim = Simulation([observer, late])
    sim.apply(observer, msg("join"))
    sim.apply(observer, msg("set_mapping", 1, mapping=MAPPINGS[0]))
    sim.apply(observer, msg("annotate", 2, row_id=3, text="alpha"))
    sim.apply(observer, msg("broadcast_start", 3))
    sim.apply(observer, msg("annotate", 4, row_id=4, text="beta"))
    sim.apply(late, msg("join"))
    assert sim.replicas[late].state_tuple() == sim.replicas[observer].state_tuple()
    assert sim.replicas[late].broadcast_navigator == observer


def test_follower_fidelity_during_broadcast(rng):
    users = ["nav", "f1", "f2"]
    sim = Simulation(users)
    for u in users:
        sim.apply(u, msg("join"))
    sim.apply("nav", msg("broadcast_start"))
    latest_seq = None
    for i in range(50):
        seq = i + 10
        sim.apply("nav", msg("viewpoint", seq, viewpoint=vp(float(rng.random()))))
        latest_seq = seq
        for f in ("f1", "f2"):
            assert sim.replicas[f].last_bcast_seq == latest_seq
            assert (
                sim.replicas[f].displayed_viewpoint
                == sim.state.users["nav"].to_json()
            )


def test_navigator_disconnect_mid_broadcast():
    users = ["nav", "f1"]
    sim = Simulation(users)
    for u in users:
        sim.apply(u, msg("join"))
    sim.apply("nav", msg("broadcast_start"))
    sim.apply("nav", msg("viewpoint", 1, viewpoint=vp(0.3)))
    sim.apply("nav", msg("leave"))
    rep = sim.replicas["f1"]
    assert rep.broadcast_navigator is None
    assert rep.displayed_viewpoint is None
    assert "nav" not in rep.users


# --- throttle -----------------------------------------------------------

def event(i):
    return (frozenset({"x"}), ProtocolMessage("viewpoint_bcast", i, {}))


def test_throttle_limits_rate():
    throttle = ViewpointThrottle(30.0)
    sent = []
    for i in range(100):
        sent.extend(throttle.submit(i / 100.0, event(i)))  # 100 in one second
    sent.extend(throttle.flush(1.0))
    assert len(sent) <= 31
    assert sent[-1][1].seq == 99  # latest kept


def test_throttle_keeps_latest_only():
    throttle = ViewpointThrottle(10.0)
    assert throttle.submit(0.0, event(0)) == [event(0)]
    assert throttle.submit(0.01, event(1)) == []
    assert throttle.submit(0.02, event(2)) == []
    assert throttle.pending == event(2)
    assert throttle.flush(0.05) == []
    assert throttle.flush(0.11) == [event(2)]
    assert throttle.pending is None


def test_throttle_spaced_submissions_pass_through():
    throttle = ViewpointThrottle(10.0)
    for i in range(5):
        assert throttle.submit(i * 0.2, event(i)) == [event(i)]


def test_annotation_type_is_immutable():
    a = Annotation(1, "u", "t", 1)
    with pytest.raises(AttributeError):
        a.text = "other"
