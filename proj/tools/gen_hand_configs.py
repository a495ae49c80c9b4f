#!/usr/bin/env python3
"""Generate the shipped capsule-hand configs (configs/shadow22.json, configs/pinch2.json).

Keypoints are one per link origin plus one per capsule endpoint that does not
coincide with the link origin. Self-collision exclusions cover keypoints on the
same link, on parent/child links (after contracting zero-length links), and any
pair closer than MIN_SEPARATION in the rest pose.
"""
import json
import math
import pathlib
import sys

import numpy as np

MIN_SEPARATION = 0.02
WORKSPACE = 0.3


def quat_from_matrix(m):
    tr = m[0, 0] + m[1, 1] + m[2, 2]
    if tr > 0:
        s = math.sqrt(tr + 1.0) * 2
        w = 0.25 * s
        x = (m[2, 1] - m[1, 2]) / s
        y = (m[0, 2] - m[2, 0]) / s
        z = (m[1, 0] - m[0, 1]) / s
    elif m[0, 0] > m[1, 1] and m[0, 0] > m[2, 2]:
        s = math.sqrt(1.0 + m[0, 0] - m[1, 1] - m[2, 2]) * 2
        w = (m[2, 1] - m[1, 2]) / s
        x = 0.25 * s
        y = (m[0, 1] + m[1, 0]) / s
        z = (m[0, 2] + m[2, 0]) / s
    elif m[1, 1] > m[2, 2]:
        s = math.sqrt(1.0 + m[1, 1] - m[0, 0] - m[2, 2]) * 2
        w = (m[0, 2] - m[2, 0]) / s
        x = (m[0, 1] + m[1, 0]) / s
        y = 0.25 * s
        z = (m[1, 2] + m[2, 1]) / s
    else:
        s = math.sqrt(1.0 + m[2, 2] - m[0, 0] - m[1, 1]) * 2
        w = (m[1, 0] - m[0, 1]) / s
        x = (m[0, 2] + m[2, 0]) / s
        y = (m[1, 2] + m[2, 1]) / s
        z = 0.25 * s
    q = np.array([w, x, y, z])
    q /= np.linalg.norm(q)
    if q[0] < 0:
        q = -q
    return [round(float(v), 12) for v in q]


def quat_to_matrix(q):
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


class Builder:
    def __init__(self, name):
        self.name = name
        self.links = []
        self.joints = []
        self.capsules = []

    def link(self, name, parent, translation, rotation=(1.0, 0.0, 0.0, 0.0),
             joint=None):
        index = len(self.links)
        self.links.append({
            "name": name,
            "parent": parent,
            "rest": {"translation": [float(v) for v in translation],
                     "rotation": [float(v) for v in rotation]},
        })
        if joint is not None:
            jname, axis, lower, upper = joint
            axis = np.asarray(axis, dtype=float)
            axis = axis / np.linalg.norm(axis)
            self.joints.append({
                "name": jname,
                "link": index,
                "axis": [round(float(v), 12) for v in axis],
                "lower": lower,
                "upper": upper,
            })
        return index

    def capsule(self, link, a, b, radius):
        self.capsules.append({"link": link, "a": [float(v) for v in a],
                              "b": [float(v) for v in b], "radius": radius})

    def rest_world(self):
        world = []
        for link in self.links:
            rot = quat_to_matrix(link["rest"]["rotation"])
            trans = np.asarray(link["rest"]["translation"])
            if link["parent"] < 0:
                world.append((rot, trans))
            else:
                pr, pt = world[link["parent"]]
                world.append((pr @ rot, pr @ trans + pt))
        return world

    def build(self):
        # keypoints
        keypoints = []
        for li in range(len(self.links)):
            keypoints.append((li, np.zeros(3)))
            for cap in self.capsules:
                if cap["link"] != li:
                    continue
                for end in (cap["a"], cap["b"]):
                    end = np.asarray(end)
                    if np.linalg.norm(end) < 1e-9:
                        continue
                    if any(k[0] == li and np.linalg.norm(k[1] - end) < 1e-9
                           for k in keypoints):
                        continue
                    keypoints.append((li, end))

        # contracted adjacency: a zero-length link merges with its parent
        def rep(li):
            while (self.links[li]["parent"] >= 0 and
                   np.linalg.norm(self.links[li]["rest"]["translation"]) < 1e-9):
                li = self.links[li]["parent"]
            return li

        def adjacent(a, b):
            ra, rb = rep(a), rep(b)
            if ra == rb:
                return True
            pa = self.links[ra]["parent"]
            pb = self.links[rb]["parent"]
            return (pa >= 0 and rep(pa) == rb) or (pb >= 0 and rep(pb) == ra)

        world = self.rest_world()
        pos = [world[li][0] @ off + world[li][1] for li, off in keypoints]
        excl = [set() for _ in keypoints]
        close = []
        for i in range(len(keypoints)):
            for j in range(i + 1, len(keypoints)):
                li, lj = keypoints[i][0], keypoints[j][0]
                d = np.linalg.norm(pos[i] - pos[j])
                if adjacent(li, lj) or d < MIN_SEPARATION:
                    excl[i].add(j)
                    excl[j].add(i)
                    if not adjacent(li, lj):
                        close.append((i, j, d))
        for i, j, d in close:
            print(f"  {self.name}: excluded close rest pair {i}-{j} ({d:.4f} m)",
                  file=sys.stderr)

        return {
            "schema_version": 1,
            "name": self.name,
            "dof": len(self.joints),
            "workspace_box": {"lower": [-WORKSPACE] * 3, "upper": [WORKSPACE] * 3},
            "links": self.links,
            "joints": self.joints,
            "keypoints": [{"link": li, "offset": [round(float(v), 12) for v in off],
                           "exclude": sorted(excl[k])}
                          for k, (li, off) in enumerate(keypoints)],
            "capsules": self.capsules,
        }


def shadow22():
    b = Builder("shadow22")
    palm = b.link("palm", -1, (0, 0, 0))
    for z in (0.015, 0.045, 0.075):
        b.capsule(palm, (-0.033, 0, z), (0.033, 0, z), 0.011)

    flex = (-1.0, 0.0, 0.0)
    fingers = [("ff", 0.033, 1.0), ("mf", 0.011, 1.0), ("rf", -0.011, -1.0)]
    for prefix, x, spread in fingers:
        up = prefix.upper()
        knuckle = b.link(prefix + "knuckle", palm, (x, 0, 0.095),
                         joint=(up + "J4", (0, spread, 0), -0.349, 0.349))
        _finger(b, prefix, up, knuckle, flex)

    meta = b.link("lfmetacarpal", palm, (-0.033, 0, 0.025),
                  joint=("LFJ5", (0.573, 0, 0.819), 0.0, 0.785))
    knuckle = b.link("lfknuckle", meta, (0, 0, 0.07),
                     joint=("LFJ4", (0, -1, 0), -0.349, 0.349))
    _finger(b, "lf", "LF", knuckle, flex)

    # Thumb chain is modelled along its own local +z; local +y is the curl
    # direction (toward the palm front and across the palm).
    along = np.array([0.25, 0.3, 1.0])
    along /= np.linalg.norm(along)
    curl = np.array([-0.75, 0.65, 0.0])
    curl -= curl.dot(along) * along
    curl /= np.linalg.norm(curl)
    side = np.cross(curl, along)
    base_rot = quat_from_matrix(np.column_stack([side, curl, along]))
    thbase = b.link("thbase", palm, (0.034, 0.009, 0.029), base_rot,
                    joint=("THJ5", (0, 0, 1), -1.047, 1.047))
    thprox = b.link("thproximal", thbase, (0, 0, 0),
                    joint=("THJ4", (-1, 0, 0), 0.0, 1.222))
    b.capsule(thprox, (0, 0, 0), (0, 0, 0.038), 0.0105)
    thhub = b.link("thhub", thprox, (0, 0, 0.038),
                   joint=("THJ3", (0, 1, 0), -0.209, 0.209))
    thmid = b.link("thmiddle", thhub, (0, 0, 0),
                   joint=("THJ2", (-1, 0, 0), -0.698, 0.698))
    b.capsule(thmid, (0, 0, 0), (0, 0, 0.032), 0.0095)
    thdist = b.link("thdistal", thmid, (0, 0, 0.032),
                    joint=("THJ1", (-1, 0, 0), -0.262, 1.571))
    b.capsule(thdist, (0, 0, 0), (0, 0, 0.0275), 0.0085)
    return b.build()


def _finger(b, prefix, up, knuckle, flex):
    prox = b.link(prefix + "proximal", knuckle, (0, 0, 0),
                  joint=(up + "J3", flex, -0.262, 1.571))
    b.capsule(prox, (0, 0, 0), (0, 0, 0.045), 0.0095)
    mid = b.link(prefix + "middle", prox, (0, 0, 0.045),
                 joint=(up + "J2", flex, 0.0, 1.571))
    b.capsule(mid, (0, 0, 0), (0, 0, 0.025), 0.009)
    dist = b.link(prefix + "distal", mid, (0, 0, 0.025),
                  joint=(up + "J1", flex, 0.0, 1.571))
    b.capsule(dist, (0, 0, 0), (0, 0, 0.024), 0.008)


def pinch2():
    b = Builder("pinch2")
    base = b.link("base", -1, (0, 0, 0))
    b.capsule(base, (-0.04, 0, 0), (0.04, 0, 0), 0.01)
    left = b.link("left", base, (-0.04, 0, 0.0),
                  joint=("LJ", (0, 1, 0), -0.5, 1.0))
    b.capsule(left, (0, 0, 0.0), (0, 0, 0.06), 0.008)
    right = b.link("right", base, (0.04, 0, 0.0),
                   joint=("RJ", (0, -1, 0), -0.5, 1.0))
    b.capsule(right, (0, 0, 0.0), (0, 0, 0.06), 0.008)
    return b.build()


def main():
    out = pathlib.Path(sys.argv[1] if len(sys.argv) > 1 else
                       pathlib.Path(__file__).resolve().parent.parent / "configs")
    out.mkdir(parents=True, exist_ok=True)
    for cfg in (shadow22(), pinch2()):
        path = out / (cfg["name"] + ".json")
        path.write_text(json.dumps(cfg, indent=2) + "\n")
        print(f"wrote {path} (dof={cfg['dof']}, links={len(cfg['links'])}, "
              f"keypoints={len(cfg['keypoints'])}, capsules={len(cfg['capsules'])})")


if __name__ == "__main__":
    main()
