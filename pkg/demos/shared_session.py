# Walk through a collaborative session without any network.
#
# The protocol is a pure function: (state, sender, message) -> new
# state plus a list of (recipients, message) to deliver. Replaying the
# deliveries into per-client replicas reproduces exactly what each
# connected client would know.

from hyperviz import (
    ChannelMapping,
    ClientReplica,
    ProtocolMessage,
    handle_message,
    initial_state,
    server_state_tuple,
)

state = initial_state("demo-room")
replicas = {}


def send(sender, type, seq, **payload):
    """Feed one client message through the machine and fan out."""
    global state
    state, events = handle_message(
        state, sender, ProtocolMessage(type, seq, payload),
        link_resolver=lambda row: f"https://archive.example/row/{row}",
    )
    for recipients, msg in events:
        for uid in recipients:
            if uid in replicas:
                replicas[uid].apply(msg)
        names = ",".join(sorted(recipients))
        print(f"  -> {msg.type} to [{names}]")


print("three users join:")
for uid in ("ana", "ben", "cho"):
    replicas[uid] = ClientReplica(uid)
    send(uid, "join", 1)

print("ana changes the channel mapping (version bumps to 1):")
mapping = ChannelMapping.from_json({"channels": {"pos_x": {"column": "ra"}}}).to_json()
send("ana", "set_mapping", 2, mapping=mapping)

print("ben starts a broadcast and moves twice:")
send("ben", "broadcast_start", 2)
send("ben", "viewpoint", 3, viewpoint={
    "position": [0.2, 0.5, 1.5], "orientation": [1, 0, 0, 0], "field_of_view": 55,
})
send("ben", "viewpoint", 4, viewpoint={
    "position": [0.4, 0.5, 1.2], "orientation": [1, 0, 0, 0], "field_of_view": 55,
})
print(f"  ana now displays ben's camera: {replicas['ana'].displayed_viewpoint['position']}")

print("cho annotates a point and asks for its archive link:")
send("cho", "annotate", 2, row_id=42, text="odd outlier, check spectrum")
send("cho", "pick_link", 3, row_id=42)
print(f"  cho received: {replicas['cho'].links[-1]['url']}")

print("ben leaves; the broadcast stops before the departure notice:")
send("ben", "leave", 5)

server = server_state_tuple(state)
agree = all(replicas[u].state_tuple() == server for u in ("ana", "cho"))
print(f"replicas agree with the server: {agree}")
print(f"final mapping version: {state.mapping_version}, annotations: {len(state.annotations)}")
