"""Trajectory metrics and guideline-conditioned re-planning.

L2 error is the mean Euclidean waypoint distance up to a horizon;
collision rate places an ego box on every planned waypoint and reports the
percentage of samples whose box overlaps any ground-truth obstacle box.
Box overlap is decided with the separating-axis test over the four
rectangle axes; touching counts as overlap.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .llm import Backend, ChatPrompt, CompletionSettings

DEFAULT_DT = 0.5
DEFAULT_EGO_LENGTH = 4.084
DEFAULT_EGO_WIDTH = 1.730
METRIC_HORIZONS = (1.0, 2.0, 3.0)

_TIME_EPS = 1e-9


class MismatchedTrajectories(Exception):
    pass


class HorizonOutOfRange(Exception):
    pass


class EmptySampleSet(Exception):
    pass


class FrameMismatch(Exception):
    """Scene has fewer obstacle frames than evaluated waypoints."""


class ParseError(Exception):
    pass


@dataclass(frozen=True)
class Trajectory:
    """Waypoints in the ego frame at t=0; waypoint i sits at t=(i+1)*dt."""

    waypoints: tuple[tuple[float, float], ...]
    dt: float = DEFAULT_DT

    def __post_init__(self) -> None:
        if not self.waypoints:
            raise ValueError("trajectory needs at least one waypoint")
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        object.__setattr__(
            self,
            "waypoints",
            tuple((float(x), float(y)) for x, y in self.waypoints),
        )

    @property
    def horizon(self) -> float:
        return len(self.waypoints) * self.dt


def _normalize_yaw(yaw: float) -> float:
    r = yaw % math.tau
    if r > math.pi:
        r -= math.tau
    return r


@dataclass(frozen=True)
class Obb:
    """Oriented bounding box: center, yaw (normalized to (-pi, pi]), dims."""

    center: tuple[float, float]
    yaw: float
    length: float
    width: float

    def __post_init__(self) -> None:
        if self.length <= 0 or self.width <= 0:
            raise ValueError("box dimensions must be positive")
        object.__setattr__(self, "yaw", _normalize_yaw(self.yaw))
        object.__setattr__(
            self, "center", (float(self.center[0]), float(self.center[1]))
        )

    def axes(self) -> tuple[tuple[float, float], tuple[float, float]]:
        c, s = math.cos(self.yaw), math.sin(self.yaw)
        return (c, s), (-s, c)

    def corners(self) -> list[tuple[float, float]]:
        (ux, uy), (vx, vy) = self.axes()
        hl, hw = self.length / 2.0, self.width / 2.0
        cx, cy = self.center
        return [
            (cx + sx * hl * ux + sy * hw * vx, cy + sx * hl * uy + sy * hw * vy)
            for sx, sy in ((1, 1), (-1, 1), (-1, -1), (1, -1))
        ]


@dataclass(frozen=True)
class SceneFrames:
    """Per-timestep ground-truth obstacle boxes, one frame per waypoint."""

    frames: tuple[tuple[Obb, ...], ...]


@dataclass(frozen=True)
class PlanningMetrics:
    l2_1s: float
    l2_2s: float
    l2_3s: float
    l2_avg: float
    collision_1s: float
    collision_2s: float
    collision_3s: float
    collision_avg: float

    def __post_init__(self) -> None:
        for name in (
            "l2_1s", "l2_2s", "l2_3s", "l2_avg",
            "collision_1s", "collision_2s", "collision_3s", "collision_avg",
        ):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if not math.isclose(
            self.l2_avg, (self.l2_1s + self.l2_2s + self.l2_3s) / 3.0,
            rel_tol=1e-9, abs_tol=1e-12,
        ):
            raise ValueError("l2_avg must be the mean of the horizon values")
        if not math.isclose(
            self.collision_avg,
            (self.collision_1s + self.collision_2s + self.collision_3s) / 3.0,
            rel_tol=1e-9, abs_tol=1e-12,
        ):
            raise ValueError("collision_avg must be the mean of the horizon values")

    def to_dict(self) -> dict:
        return {
            "l2": {
                "1s": self.l2_1s,
                "2s": self.l2_2s,
                "3s": self.l2_3s,
                "avg": self.l2_avg,
            },
            "collision": {
                "1s": self.collision_1s,
                "2s": self.collision_2s,
                "3s": self.collision_3s,
                "avg": self.collision_avg,
            },
        }


def _steps_within(trajectory: Trajectory, horizon: float) -> int:
    """Number of waypoints with timestamp <= horizon; the horizon must land
    on a waypoint timestamp inside the trajectory span."""
    if horizon <= 0:
        raise HorizonOutOfRange(f"horizon must be positive: {horizon}")
    steps = horizon / trajectory.dt
    k = round(steps)
    if abs(steps - k) > _TIME_EPS or k < 1:
        raise HorizonOutOfRange(
            f"horizon {horizon} is not a multiple of dt {trajectory.dt}"
        )
    if k > len(trajectory.waypoints):
        raise HorizonOutOfRange(
            f"horizon {horizon} exceeds the {trajectory.horizon:.1f}s span"
        )
    return k


def l2_error(pred: Trajectory, gt: Trajectory, horizon: float) -> float:
    """Mean Euclidean distance over waypoint pairs with timestamp <= horizon."""
    if pred.dt != gt.dt or len(pred.waypoints) != len(gt.waypoints):
        raise MismatchedTrajectories(
            f"pred ({len(pred.waypoints)} @ {pred.dt}s) vs "
            f"gt ({len(gt.waypoints)} @ {gt.dt}s)"
        )
    k = _steps_within(pred, horizon)
    total = 0.0
    for (px, py), (gx, gy) in zip(pred.waypoints[:k], gt.waypoints[:k]):
        total += math.hypot(px - gx, py - gy)
    return total / k


def obb_intersects(a: Obb, b: Obb) -> bool:
    """Separating-axis test over the 4 rectangle axes; touching overlaps."""
    return separation_margin(a, b) >= 0.0


def separation_margin(a: Obb, b: Obb) -> float:
    """Minimum over the 4 candidate axes of (summed half-extent projections
    minus center distance). Negative means separated by that much along the
    best axis; non-negative means overlap with at least that penetration
    bound."""
    (aux, auy), (avx, avy) = a.axes()
    (bux, buy), (bvx, bvy) = b.axes()
    dx = b.center[0] - a.center[0]
    dy = b.center[1] - a.center[1]
    ahl, ahw = a.length / 2.0, a.width / 2.0
    bhl, bhw = b.length / 2.0, b.width / 2.0
    margin = math.inf
    for nx, ny in ((aux, auy), (avx, avy), (bux, buy), (bvx, bvy)):
        dist = abs(dx * nx + dy * ny)
        ra = ahl * abs(aux * nx + auy * ny) + ahw * abs(avx * nx + avy * ny)
        rb = bhl * abs(bux * nx + buy * ny) + bhw * abs(bvx * nx + bvy * ny)
        margin = min(margin, ra + rb - dist)
    return margin


def waypoint_yaws(waypoints: Sequence[tuple[float, float]]) -> list[float]:
    """Ego yaw per waypoint: heading of the arriving segment; the first
    waypoint uses the departing segment; zero-length segments inherit the
    previous heading, defaulting to 0."""
    n = len(waypoints)
    yaws: list[float] = []
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
        yaw = prev if dx == 0.0 and dy == 0.0 else math.atan2(dy, dx)
        yaws.append(yaw)
        prev = yaw
    return yaws


def _sample_collides(
    pred: Trajectory,
    scene: SceneFrames,
    ego_length: float,
    ego_width: float,
    horizon: float,
) -> bool:
    k = _steps_within(pred, horizon)
    if len(scene.frames) < k:
        raise FrameMismatch(
            f"scene has {len(scene.frames)} frames, trajectory needs {k}"
        )
    yaws = waypoint_yaws(pred.waypoints)
    for i in range(k):
        ego = Obb(
            center=pred.waypoints[i],
            yaw=yaws[i],
            length=ego_length,
            width=ego_width,
        )
        for box in scene.frames[i]:
            if obb_intersects(ego, box):
                return True
    return False


def collision_rate(
    samples: Sequence[tuple[Trajectory, SceneFrames]],
    ego_length: float,
    ego_width: float,
    horizon: float,
) -> float:
    """Percentage of samples whose ego box, placed on each waypoint up to
    the horizon, overlaps any obstacle box in the matching frame."""
    if not samples:
        raise EmptySampleSet("collision_rate needs at least one sample")
    colliding = sum(
        1
        for pred, scene in samples
        if _sample_collides(pred, scene, ego_length, ego_width, horizon)
    )
    return 100.0 * colliding / len(samples)


@dataclass(frozen=True)
class EvalSample:
    pred: Trajectory
    gt: Trajectory
    scene: SceneFrames


def evaluate(
    pairs: Sequence[EvalSample],
    ego_length: float = DEFAULT_EGO_LENGTH,
    ego_width: float = DEFAULT_EGO_WIDTH,
) -> PlanningMetrics:
    """All eight metric fields over the sample set at 1s/2s/3s horizons."""
    if not pairs:
        raise EmptySampleSet("evaluate needs at least one sample")
    l2 = {}
    collision = {}
    for horizon in METRIC_HORIZONS:
        l2[horizon] = sum(l2_error(s.pred, s.gt, horizon) for s in pairs) / len(pairs)
        collision[horizon] = collision_rate(
            [(s.pred, s.scene) for s in pairs], ego_length, ego_width, horizon
        )
    return PlanningMetrics(
        l2_1s=l2[1.0],
        l2_2s=l2[2.0],
        l2_3s=l2[3.0],
        l2_avg=(l2[1.0] + l2[2.0] + l2[3.0]) / 3.0,
        collision_1s=collision[1.0],
        collision_2s=collision[2.0],
        collision_3s=collision[3.0],
        collision_avg=(collision[1.0] + collision[2.0] + collision[3.0]) / 3.0,
    )


def render_metrics_table(metrics: PlanningMetrics) -> str:
    """Aligned text table, one row per metric with 1s/2s/3s/Avg columns."""
    header = f"{'':14s}  {'1s':>7s}  {'2s':>7s}  {'3s':>7s}  {'Avg.':>7s}"
    l2_row = (
        f"{'L2 (m)':14s}  {metrics.l2_1s:7.3f}  {metrics.l2_2s:7.3f}  "
        f"{metrics.l2_3s:7.3f}  {metrics.l2_avg:7.3f}"
    )
    col_row = (
        f"{'Collision (%)':14s}  {metrics.collision_1s:7.2f}  "
        f"{metrics.collision_2s:7.2f}  {metrics.collision_3s:7.2f}  "
        f"{metrics.collision_avg:7.2f}"
    )
    return "\n".join((header, l2_row, col_row))


def serialize_trajectory(t: Trajectory) -> str:
    """Render waypoints as "(x,y), ..." with exactly two decimal places."""
    return ", ".join(f"({x:.2f},{y:.2f})" for x, y in t.waypoints)


_NUM = r"[-+]?(?:\d+(?:\.\d*)?|\.\d+)"
_PAIR_RE = re.compile(rf"\(\s*({_NUM})\s*,\s*({_NUM})\s*\)")
_SEP_RE = re.compile(r"[\s,]*")


def parse_trajectory(raw: str, expected_n: int, dt: float) -> Trajectory:
    """Strict inverse of serialize_trajectory: exactly expected_n pairs,
    optional whitespace, nothing else in the string."""
    text = raw.strip()
    pos = 0
    waypoints: list[tuple[float, float]] = []
    while pos < len(text):
        m = _PAIR_RE.match(text, pos)
        if not m:
            raise ParseError(f"malformed trajectory at offset {pos}: {text[pos:pos+20]!r}")
        waypoints.append((float(m.group(1)), float(m.group(2))))
        pos = _SEP_RE.match(text, m.end()).end()
    if len(waypoints) != expected_n:
        raise ParseError(
            f"expected {expected_n} waypoints, found {len(waypoints)}"
        )
    return Trajectory(waypoints=tuple(waypoints), dt=dt)


REPLAN_SYSTEM = (
    "You re-plan driving trajectories to follow local-rule guidelines."
)

REPLAN_PROMPT = (
    "Initial planned trajectory ({n} waypoints, {dt}s apart, ego frame):\n"
    "{trajectory}\n"
    "Guideline: {guideline}\n"
    "Re-plan the trajectory so it follows the guideline. Reply with exactly "
    "{n} waypoints in the same \"(x,y), (x,y), ...\" format and nothing else."
)

REPLAN_FORMAT_REMINDER = (
    "\nYour previous reply did not parse. Reply with exactly {n} "
    "comma-separated \"(x,y)\" pairs, two decimals, and no other text."
)


@dataclass(frozen=True)
class ReplanResult:
    trajectory: Trajectory
    fallback: bool
    completions: int


def replan_trajectory(
    initial: Trajectory,
    guideline,
    backend: Backend,
    settings: CompletionSettings,
) -> ReplanResult:
    """Ask the backend to re-plan under a guideline; on a parse failure
    retry once with a format reminder, then fall back to the initial
    trajectory with the fallback flag set.

    ``guideline`` is a NewPlan or a plain instruction string.
    """
    instruction = getattr(guideline, "instruction", guideline)
    if not str(instruction).strip():
        raise ValueError("guideline must be non-empty")
    n = len(initial.waypoints)
    base = REPLAN_PROMPT.format(
        n=n,
        dt=initial.dt,
        trajectory=serialize_trajectory(initial),
        guideline=instruction,
    )
    prompt = ChatPrompt.of(system=REPLAN_SYSTEM, user=base)
    raw = backend.complete(prompt, settings)
    try:
        return ReplanResult(parse_trajectory(raw, n, initial.dt), False, 1)
    except ParseError:
        pass
    retry_prompt = ChatPrompt.of(
        system=REPLAN_SYSTEM, user=base + REPLAN_FORMAT_REMINDER.format(n=n)
    )
    raw = backend.complete(retry_prompt, settings)
    try:
        return ReplanResult(parse_trajectory(raw, n, initial.dt), False, 2)
    except ParseError:
        return ReplanResult(initial, True, 2)


def sample_from_dict(d: dict) -> EvalSample:
    """Build an EvalSample from the scene fixture schema: pred/gt waypoint
    arrays, dt, and per-timestep frames of obstacle boxes."""
    try:
        dt = float(d["dt"])
        pred = Trajectory(tuple((p[0], p[1]) for p in d["pred"]), dt)
        gt = Trajectory(tuple((p[0], p[1]) for p in d["gt"]), dt)
        frames = tuple(
            tuple(
                Obb(
                    center=(box["cx"], box["cy"]),
                    yaw=box["yaw"],
                    length=box["length"],
                    width=box["width"],
                )
                for box in frame
            )
            for frame in d["frames"]
        )
    except (KeyError, TypeError, IndexError) as exc:
        raise ParseError(f"malformed eval sample: {exc}") from exc
    return EvalSample(pred=pred, gt=gt, scene=SceneFrames(frames=frames))


def load_manifest(path: str | Path) -> list[EvalSample]:
    """Read an eval manifest: {"samples": [relative file, ...]}."""
    manifest_path = Path(path)
    try:
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
        names = manifest["samples"]
    except (ValueError, KeyError) as exc:
        raise ParseError(f"malformed eval manifest: {exc}") from exc
    samples = []
    for name in names:
        data = json.loads((manifest_path.parent / name).read_text(encoding="utf-8"))
        samples.append(sample_from_dict(data))
    return samples
