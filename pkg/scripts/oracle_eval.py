#!/usr/bin/env python3
"""Brute-force motion-plan metrics, kept deliberately independent of the
llada package. Uses plain loops and a vertex/edge rectangle-overlap test
instead of separating axes, so the two routes share no code.

Usage: python scripts/oracle_eval.py MANIFEST [--ego-length L] [--ego-width W]
Prints a JSON object with l2 and collision fields for 1s/2s/3s/avg.
"""

import argparse
import json
import math
import sys
from pathlib import Path

HORIZONS = (1.0, 2.0, 3.0)
EPS = 1e-9


def load_manifest(path):
    manifest_path = Path(path)
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    samples = []
    for name in manifest["samples"]:
        sample = json.loads((manifest_path.parent / name).read_text(encoding="utf-8"))
        samples.append(sample)
    return samples


def waypoint_count(n_points, dt, horizon):
    # waypoint i sits at t = (i + 1) * dt
    k = 0
    for i in range(n_points):
        if (i + 1) * dt <= horizon + EPS:
            k = i + 1
    return k


def l2_at_horizon(sample, horizon):
    pred = sample["pred"]
    gt = sample["gt"]
    dt = sample["dt"]
    k = waypoint_count(len(pred), dt, horizon)
    total = 0.0
    for i in range(k):
        dx = pred[i][0] - gt[i][0]
        dy = pred[i][1] - gt[i][1]
        total += math.sqrt(dx * dx + dy * dy)
    return total / k


def rect_corners(cx, cy, yaw, length, width):
    c, s = math.cos(yaw), math.sin(yaw)
    hl, hw = length / 2.0, width / 2.0
    corners = []
    for lx, ly in ((hl, hw), (-hl, hw), (-hl, -hw), (hl, -hw)):
        corners.append((cx + lx * c - ly * s, cy + lx * s + ly * c))
    return corners


def point_in_rect(px, py, cx, cy, yaw, length, width):
    c, s = math.cos(yaw), math.sin(yaw)
    dx, dy = px - cx, py - cy
    lx = dx * c + dy * s
    ly = -dx * s + dy * c
    return abs(lx) <= length / 2.0 and abs(ly) <= width / 2.0


def orientation(ax, ay, bx, by, cx, cy):
    v = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)
    if v > 0.0:
        return 1
    if v < 0.0:
        return -1
    return 0


def on_segment(ax, ay, bx, by, px, py):
    return (
        min(ax, bx) <= px <= max(ax, bx)
        and min(ay, by) <= py <= max(ay, by)
    )


def segments_intersect(p1, p2, p3, p4):
    o1 = orientation(*p1, *p2, *p3)
    o2 = orientation(*p1, *p2, *p4)
    o3 = orientation(*p3, *p4, *p1)
    o4 = orientation(*p3, *p4, *p2)
    if o1 != o2 and o3 != o4:
        return True
    if o1 == 0 and on_segment(*p1, *p2, *p3):
        return True
    if o2 == 0 and on_segment(*p1, *p2, *p4):
        return True
    if o3 == 0 and on_segment(*p3, *p4, *p1):
        return True
    if o4 == 0 and on_segment(*p3, *p4, *p2):
        return True
    return False


def rects_overlap(a, b):
    """a, b: (cx, cy, yaw, length, width). Touching counts as overlap."""
    ca = rect_corners(*a)
    cb = rect_corners(*b)
    for px, py in ca:
        if point_in_rect(px, py, *b):
            return True
    for px, py in cb:
        if point_in_rect(px, py, *a):
            return True
    for i in range(4):
        e1 = (ca[i], ca[(i + 1) % 4])
        for j in range(4):
            e2 = (cb[j], cb[(j + 1) % 4])
            if segments_intersect(e1[0], e1[1], e2[0], e2[1]):
                return True
    return False


def ego_yaws(waypoints):
    """Heading of the segment arriving at each waypoint; the first waypoint
    uses the departing segment; zero-length segments inherit the previous
    heading, starting from 0."""
    n = len(waypoints)
    yaws = []
    prev = 0.0
    for i in range(n):
        if i == 0:
            if n > 1:
                dx = waypoints[1][0] - waypoints[0][0]
                dy = waypoints[1][1] - waypoints[0][1]
            else:
                dx = dy = 0.0
        else:
            dx = waypoints[i][0] - waypoints[i - 1][0]
            dy = waypoints[i][1] - waypoints[i - 1][1]
        if dx == 0.0 and dy == 0.0:
            yaw = prev
        else:
            yaw = math.atan2(dy, dx)
        yaws.append(yaw)
        prev = yaw
    return yaws


def sample_collides(sample, ego_length, ego_width, horizon):
    pred = sample["pred"]
    dt = sample["dt"]
    frames = sample["frames"]
    k = waypoint_count(len(pred), dt, horizon)
    yaws = ego_yaws(pred)
    for i in range(k):
        ego = (pred[i][0], pred[i][1], yaws[i], ego_length, ego_width)
        for box in frames[i]:
            obb = (box["cx"], box["cy"], box["yaw"], box["length"], box["width"])
            if rects_overlap(ego, obb):
                return True
    return False


def compute(samples, ego_length, ego_width):
    l2 = {}
    collision = {}
    for horizon in HORIZONS:
        key = f"{horizon:.0f}s"
        l2[key] = sum(l2_at_horizon(s, horizon) for s in samples) / len(samples)
        n_collide = sum(
            1 for s in samples if sample_collides(s, ego_length, ego_width, horizon)
        )
        collision[key] = 100.0 * n_collide / len(samples)
    l2["avg"] = (l2["1s"] + l2["2s"] + l2["3s"]) / 3.0
    collision["avg"] = (collision["1s"] + collision["2s"] + collision["3s"]) / 3.0
    return {"l2": l2, "collision": collision}


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("manifest")
    parser.add_argument("--ego-length", type=float, default=4.084)
    parser.add_argument("--ego-width", type=float, default=1.730)
    args = parser.parse_args(argv)
    samples = load_manifest(args.manifest)
    result = compute(samples, args.ego_length, args.ego_width)
    json.dump(result, sys.stdout, indent=2)
    print()


if __name__ == "__main__":
    main()
