"""Assembly-constraint engine and planner.

Documents (scenes, specs, placements, plans) are plain dicts in the same
layout as the JSON files the command-line tool reads and writes. Inputs may
also be file paths; relative references inside a scene file resolve against
its directory.
"""

import json
import os

from . import _nestplan as _core
from ._nestplan import NestplanError

__all__ = [
    "NestplanError",
    "Session",
    "error_code",
    "fk",
    "group_hulls",
    "ik",
    "order_groups",
    "plan",
    "quickhull",
    "reduce",
    "resolve",
    "settle",
    "validate_scene",
]


def _dump(doc):
    if isinstance(doc, os.PathLike):
        return os.fspath(doc)
    return doc if isinstance(doc, str) else json.dumps(doc)


def error_code(err):
    """Wire code ("UnknownId", "DUP_ID", ...) of a NestplanError."""
    return json.loads(str(err))["error"]["code"]


def quickhull(points, parallel=True):
    return json.loads(_core.quickhull([list(map(float, p)) for p in points], parallel))


def reduce(points, cell_size=0.0):
    reps, touches, cells = _core.reduce([list(map(float, p)) for p in points], cell_size)
    return {"representatives": reps, "touches": touches, "cells": cells}


def validate_scene(scene):
    return json.loads(_core.validate_scene(_dump(scene)))


def group_hulls(scene, spec):
    return json.loads(_core.group_hulls(_dump(scene), _dump(spec)))


def resolve(scene, spec, seed=0):
    return json.loads(_core.resolve(_dump(scene), _dump(spec), seed))


def settle(scene, spec, placement):
    return json.loads(_core.settle(_dump(scene), _dump(spec), _dump(placement)))


def plan(scene, spec, seed=0):
    return json.loads(_core.plan(_dump(scene), _dump(spec), seed))


def fk(arm, q):
    return json.loads(_core.fk(_dump(arm), list(q)))


def ik(arm, pose, seed=()):
    return _core.ik(_dump(arm), _dump(pose), list(seed))


def order_groups(centroids, base=(0.0, 0.0, 0.0), parents=None):
    order, length = _core.order_groups(centroids, list(base), parents or {})
    return order, length


class Session:
    """In-process authoring service; the same routes as the HTTP server."""

    def __init__(self, scene=None, seed=0):
        self._svc = _core.Session(_dump(scene) if scene is not None else "", seed)

    def request(self, method, path, body=None, query=None):
        status, text = self._svc.request(method, path, "" if body is None else _dump(body), query or {})
        return status, json.loads(text)

    def events(self, session, after=0):
        return [(seq, json.loads(data)) for seq, data in self._svc.events(session, after)]

    def serve(self):
        return self._svc.serve()

    def stop(self):
        self._svc.stop()
