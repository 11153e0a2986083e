"""Regenerates scene.json and spec.json for the gearbox example."""

import json
import math
import pathlib

HERE = pathlib.Path(__file__).resolve().parent
IDENTITY = [1.0, 0.0, 0.0, 0.0]


def box(w, d, h):
    xs, ys = (-w / 2, w / 2), (-d / 2, d / 2)
    verts = [[x, y, z] for z in (0.0, h) for y in ys for x in xs]
    tris = [
        [0, 2, 1], [1, 2, 3],  # bottom
        [4, 5, 6], [5, 7, 6],  # top
        [0, 1, 4], [1, 5, 4],
        [2, 6, 3], [3, 6, 7],
        [0, 4, 2], [2, 4, 6],
        [1, 3, 5], [3, 7, 5],
    ]
    return verts, tris


def prism(n, r, h):
    ring = [[r * math.cos(2 * math.pi * k / n), r * math.sin(2 * math.pi * k / n)] for k in range(n)]
    verts = [[x, y, 0.0] for x, y in ring] + [[x, y, h] for x, y in ring]
    tris = []
    for k in range(n):
        a, b = k, (k + 1) % n
        tris += [[a, b, n + a], [b, n + b, n + a]]
    for k in range(1, n - 1):
        tris += [[0, k + 1, k], [n, n + k, n + k + 1]]
    return verts, tris


def pose(x, y, z):
    return {"translation": [x, y, z], "rotation": IDENTITY}


# id: (mesh, padding, group, local xyz in the group frame)
PARTS = {
    "housing": (box(0.16, 0.12, 0.04), 0.005, "base_assembly", (0.0, 0.0, 0.005)),
    "bearing_block": (box(0.04, 0.04, 0.03), 0.005, "base_assembly", (0.03, 0.0, 0.055)),
    "gear_large": (prism(8, 0.05, 0.02), 0.005, "gear_train", (0.0, 0.0, 0.005)),
    "gear_small": (prism(6, 0.03, 0.02), 0.005, "gear_train", (0.095, 0.0, 0.005)),
    "shaft": (box(0.015, 0.015, 0.08), 0.005, "gear_train", (-0.08, 0.0, 0.005)),
    "cover": (box(0.10, 0.08, 0.01), 0.003, "cover_set", (0.0, 0.0, 0.003)),
    "screw_a": (box(0.01, 0.01, 0.02), 0.003, "cover_set", (0.07, 0.02, 0.003)),
    "screw_b": (box(0.01, 0.01, 0.02), 0.003, "cover_set", (0.07, -0.02, 0.003)),
}

# id: (mode, parent, origin in the parent frame)
GROUPS = {
    "base_assembly": ("absolute", None, (0.45, 0.25, 0.0)),
    "gear_train": ("relative", None, (-0.2, 0.4, 0.0)),
    "cover_set": ("relative", "gear_train", (0.0, -0.2, 0.0)),
}


def world_origin(group):
    mode, parent, (x, y, z) = GROUPS[group]
    if parent is None:
        return (x, y, z)
    px, py, pz = world_origin(parent)
    return (px + x, py + y, pz + z)


def main():
    objects = []
    for oid, ((verts, tris), pad, group, (x, y, z)) in PARTS.items():
        gx, gy, gz = world_origin(group)
        objects.append({"id": oid, "vertices": verts, "triangles": tris, "padding": pad,
                        "pose": pose(gx + x, gy + y, gz + z)})
    scene = {
        "format_version": 1,
        "objects": objects,
        "workspace": {
            "table_height": 0.0,
            "table_min": [-0.45, -0.6],
            "table_max": [0.65, 0.6],
            "arm_base": [0.0, 0.0, 0.0],
            "reach": 0.75,
            "base_clearance": 0.25,
            "unit_clearance": 0.03,
            "staging_depth": 0.15,
        },
        "arm": "../arms/ur5.json",
    }

    def group_json(gid):
        mode, parent, (x, y, z) = GROUPS[gid]
        children = [oid for oid, part in PARTS.items() if part[2] == gid]
        children += [{"group": group_json(c)} for c, g in GROUPS.items() if g[1] == gid]
        return {"id": gid, "mode": mode, "pose": pose(x, y, z), "children": children}

    spec = {
        "format_version": 1,
        "roots": [{"group": group_json(g)} for g, v in GROUPS.items() if v[1] is None],
        "objects": [{"id": oid, "pose": pose(*part[3]), "padding": part[1]} for oid, part in PARTS.items()],
    }
    (HERE / "scene.json").write_text(json.dumps(scene, indent=1) + "\n")
    (HERE / "spec.json").write_text(json.dumps(spec, indent=1) + "\n")


if __name__ == "__main__":
    main()
