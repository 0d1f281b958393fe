# Stand up the collaboration server and exercise it as a client.
#
# The server exposes the scene for each room over HTTP (GET /scene/<room>)
# and the session protocol over a websocket (/ws/<room>). This demo uses
# the in-process test client so it runs without opening a port; the real
# thing is `python3 -m hyperviz.cli serve --catalog stars.csv --bind
# 127.0.0.1:8000`.

import json

import numpy as np
from fastapi.testclient import TestClient

from hyperviz import Catalog, LinkTemplate, read_scene_bytes
from hyperviz.server import ServeConfig, build_app

rng = np.random.default_rng(5)
catalog = Catalog.from_arrays(
    {
        "x": rng.random(500),
        "y": rng.random(500),
        "z": rng.random(500),
        "name": np.arange(500).astype(str),
    }
)

config = ServeConfig(
    catalog=catalog,
    link_template=LinkTemplate("https://archive.example/object?q={name}"),
    budget=200,  # decimate every room's scene to at most 200 points
)
app = build_app(config)

with TestClient(app) as client:
    with client.websocket_connect("/ws/obs-night") as ws:
        ws.send_text(json.dumps({"type": "join", "seq": 1, "payload": {"user": "ana"}}))
        welcome = json.loads(ws.receive_text())
        print(f"welcome: room has users {list(welcome['payload']['users'])}")

        # Scene downloads carry the mapping version in a header so a
        # client can tell whether its copy is stale.
        resp = client.get("/scene/obs-night")
        scene = read_scene_bytes(resp.content)
        print(f"scene download: {scene.count} points (budget 200), "
              f"version {resp.headers['X-Mapping-Version']}")

        # Remap: every member is notified, the scene rebuilds in the
        # background, and the version header moves forward.
        mapping = {"channels": {"pos_x": {"column": "y"}, "pos_y": {"column": "x"}}}
        ws.send_text(json.dumps({"type": "set_mapping", "seq": 2, "payload": {"mapping": mapping}}))
        note = json.loads(ws.receive_text())
        print(f"server says: {note['type']} -> version {note['payload']['mapping_version']}")

        # Ask for the archive link behind a point.
        ws.send_text(json.dumps({"type": "pick_link", "seq": 3, "payload": {"row_id": 7}}))
        link = json.loads(ws.receive_text())
        print(f"link for row 7: {link['payload']['url']}")
