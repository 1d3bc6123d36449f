#!/usr/bin/env python3
"""Generate the 5-scene synthetic eval fixture set under fixtures/eval/.

Scenes cover: exact match, constant offset, final-waypoint offset, a
mid-horizon collision, and a curved trajectory among clear obstacles.
Values are chosen with comfortable margins so any correct overlap test
agrees on the collision outcomes.
"""

import json
import math
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
OUT = ROOT / "fixtures" / "eval"

DT = 0.5
N = 6

FAR_BOX = {"cx": 100.0, "cy": 50.0, "yaw": 0.7, "length": 4.0, "width": 2.0}


def straight(n=N, speed=5.0):
    return [[round(speed * DT * (i + 1), 4), 0.0] for i in range(n)]


def arc(n=N, radius=15.0, step=0.1):
    pts = []
    for i in range(1, n + 1):
        theta = step * i
        pts.append(
            [round(radius * math.sin(theta), 4), round(radius * (1 - math.cos(theta)), 4)]
        )
    return pts


def offset(points, dx, dy):
    return [[round(x + dx, 4), round(y + dy, 4)] for x, y in points]


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    gt = straight()

    scenes = {}
    scenes["scene_0.json"] = {
        "pred": gt,
        "gt": gt,
        "dt": DT,
        "frames": [[] for _ in range(N)],
    }
    scenes["scene_1.json"] = {
        "pred": offset(gt, 0.3, 0.4),
        "gt": gt,
        "dt": DT,
        "frames": [[FAR_BOX] for _ in range(N)],
    }
    pred2 = [list(p) for p in gt]
    pred2[-1] = [round(pred2[-1][0] + 0.6, 4), round(pred2[-1][1] + 0.8, 4)]
    scenes["scene_2.json"] = {
        "pred": pred2,
        "gt": gt,
        "dt": DT,
        "frames": [[FAR_BOX] for _ in range(N)],
    }
    # obstacle parked exactly on the 2s waypoint; earlier frames are clear
    frames3 = [[{"cx": 10.0, "cy": 30.0, "yaw": 0.0, "length": 4.0, "width": 2.0}]
               for _ in range(N)]
    frames3[3] = [{"cx": 10.0, "cy": 0.0, "yaw": 0.0, "length": 4.0, "width": 2.0}]
    scenes["scene_3.json"] = {
        "pred": gt,
        "gt": gt,
        "dt": DT,
        "frames": frames3,
    }
    gt4 = arc()
    deltas = [(0.10, 0.00), (0.10, 0.05), (0.20, -0.10),
              (0.00, 0.20), (-0.10, 0.10), (0.15, 0.25)]
    pred4 = [
        [round(x + dx, 4), round(y + dy, 4)]
        for (x, y), (dx, dy) in zip(gt4, deltas)
    ]
    near_boxes = [
        {"cx": 4.0, "cy": 7.5, "yaw": 0.3, "length": 4.5, "width": 1.8},
        {"cx": 14.0, "cy": -6.0, "yaw": -0.6, "length": 4.0, "width": 2.0},
    ]
    scenes["scene_4.json"] = {
        "pred": pred4,
        "gt": gt4,
        "dt": DT,
        "frames": [list(near_boxes) for _ in range(N)],
    }

    for name, payload in scenes.items():
        (OUT / name).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    manifest = {"samples": sorted(scenes)}
    (OUT / "manifest.json").write_text(
        json.dumps(manifest, indent=2) + "\n", encoding="utf-8"
    )
    print(f"wrote {len(scenes)} scenes + manifest to {OUT}")


if __name__ == "__main__":
    main()
