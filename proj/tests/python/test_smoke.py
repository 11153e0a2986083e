import itertools
import json
import os
import random
import urllib.request
from pathlib import Path

import pytest

import nestplan

DATA = Path(os.environ.get("NESTPLAN_DATA_DIR", Path(__file__).resolve().parents[2] / "data"))


def load(name):
    return json.loads((DATA / name).read_text())


def cube(oid, x, size=0.1, padding=0.0):
    h = size / 2
    verts = [[sx * h, sy * h, sz * h + h] for sz in (-1, 1) for sy in (-1, 1) for sx in (-1, 1)]
    tris = [[0, 2, 1], [1, 2, 3], [4, 5, 6], [5, 7, 6], [0, 1, 4], [1, 5, 4],
            [2, 6, 3], [3, 6, 7], [0, 4, 2], [2, 4, 6], [1, 3, 5], [3, 7, 5]]
    return {"id": oid, "padding": padding, "vertices": verts, "triangles": tris,
            "pose": {"translation": [x, 0.3, 0.0], "rotation": [1, 0, 0, 0]}}


def scene(n=3):
    return {"format_version": 1, "objects": [cube(f"o{i}", 0.2 * i) for i in range(n)]}


def test_cube_hull_has_eight_corners():
    corners = [[x, y, z] for x in (0, 1) for y in (0, 1) for z in (0, 1)]
    hull = nestplan.quickhull(corners + [[0.5, 0.5, 0.5]])
    assert sorted(map(tuple, hull["vertices"])) == sorted(map(tuple, corners))
    assert len(hull["faces"]) == 12


def test_reduce_touches_every_point_once():
    rng = random.Random(4)
    pts = [[rng.random(), rng.random(), rng.random()] for _ in range(5000)]
    r = nestplan.reduce(pts, 0.1)
    assert r["touches"] == len(pts)
    assert len(r["representatives"]) <= 6 * r["cells"]


def test_duplicate_ids_are_reported():
    doc = scene(1)
    doc["objects"].append(doc["objects"][0])
    with pytest.raises(nestplan.NestplanError) as err:
        nestplan.validate_scene(doc)
    assert nestplan.error_code(err.value) == "DUP_ID"


def test_fk_ik_round_trip():
    arm = load("arms/ur5.json")
    q = [0.3, -1.0, 1.2, -0.5, 0.8, 0.1]
    pose = nestplan.fk(arm, q)
    back = nestplan.fk(arm, nestplan.ik(arm, pose, q))
    assert all(abs(a - b) < 1e-6 for a, b in zip(back["translation"], pose["translation"]))


def test_group_order_matches_enumeration():
    rng = random.Random(9)
    c = {f"g{i}": [rng.uniform(-1, 1), rng.uniform(-1, 1), 0.0] for i in range(6)}

    def length(order):
        pts = [[0.0, 0.0, 0.0]] + [c[g] for g in order]
        return sum(sum((a - b) ** 2 for a, b in zip(p, q)) ** 0.5 for p, q in zip(pts, pts[1:]))

    _, got = nestplan.order_groups(c)
    assert got == pytest.approx(min(length(p) for p in itertools.permutations(c)), abs=1e-9)


def test_gearbox_plan_is_deterministic():
    sc, spec = DATA / "gearbox/scene.json", load("gearbox/spec.json")
    first = nestplan.plan(sc, spec, seed=7)
    assert len(first["steps"]) == 8
    assert first == nestplan.plan(sc, spec, seed=7)


def test_session_routes_and_events():
    svc = nestplan.Session(scene())
    status, body = svc.request("POST", "/session")
    assert status == 200
    s = body["session"]
    status, body = svc.request("POST", f"/session/{s}/group", {"a": "o0", "b": "o1"})
    assert status == 200
    g = body["group"]
    status, body = svc.request("POST", f"/session/{s}/nest", {"first": g, "second": g})
    assert status == 409 and body["error"]["code"] == "CycleError"
    status, _ = svc.request("DELETE", f"/session/{s}/group/{g}")
    assert status == 200
    ops = [e["op"] for _, e in svc.events(s)]
    assert ops == ["group", "delete"]


def test_http_transport():
    svc = nestplan.Session(scene())
    port = svc.serve()
    try:
        req = urllib.request.Request(f"http://127.0.0.1:{port}/session", data=b"", method="POST")
        with urllib.request.urlopen(req, timeout=10) as resp:
            assert resp.status == 200
            assert "session" in json.loads(resp.read())
    finally:
        svc.stop()
