"""Planar track datasets, the proximity swap model and the trajectory CSV format.

CSV layout: header ``frame,object,x,y``, one row per object per frame,
frames numbered contiguously from 0.
"""
from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

HEADER = ("frame", "object", "x", "y")


class TrajectoryFormatError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class TrackDataset:
    """positions[t, k] is the (x, y) location of object ``object_ids[k]`` at frame t."""

    positions: np.ndarray
    object_ids: tuple[int, ...]

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float)
        if pos.ndim != 3 or pos.shape[2] != 2:
            raise ValueError(f"positions must have shape (frames, objects, 2), got {pos.shape}")
        if pos.shape[1] != len(self.object_ids):
            raise ValueError("object_ids does not match the number of objects")
        if not np.all(np.isfinite(pos)):
            raise ValueError("positions must be finite")
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "object_ids", tuple(int(i) for i in self.object_ids))

    @property
    def frames(self) -> int:
        return self.positions.shape[0]

    @property
    def objects(self) -> int:
        return self.positions.shape[1]

    def __eq__(self, other):
        if not isinstance(other, TrackDataset):
            return NotImplemented
        return self.object_ids == other.object_ids and np.array_equal(self.positions, other.positions)


@dataclass(frozen=True)
class SwapModelParams:
    p_swap: float = 0.1
    s: float = 0.1

    def __post_init__(self):
        if not 0.0 <= self.p_swap <= 1.0:
            raise ValueError(f"p_swap must lie in [0, 1], got {self.p_swap}")
        if not self.s > 0:
            raise ValueError(f"scale must be positive, got {self.s}")


def min_pair_distance(data: TrackDataset) -> float:
    pos = data.positions
    diff = pos[:, :, None, :] - pos[:, None, :, :]
    dist = np.sqrt((diff**2).sum(-1))
    iu = np.triu_indices(data.objects, 1)
    return float(dist[:, iu[0], iu[1]].min())


def _waypoint_path(frames: int, rng: np.random.Generator, min_leg: int, max_leg: int) -> np.ndarray:
    times = [0]
    while times[-1] < frames - 1:
        times.append(times[-1] + int(rng.integers(min_leg, max_leg + 1)))
    points = rng.random((len(times), 2))
    t = np.arange(frames)
    leg = np.searchsorted(times, t, side="right") - 1
    leg = np.minimum(leg, len(times) - 2)
    t0 = np.asarray(times)[leg]
    t1 = np.asarray(times)[leg + 1]
    frac = (t - t0) / (t1 - t0)
    # smoothstep easing keeps velocity continuous at the waypoints
    frac = frac * frac * (3.0 - 2.0 * frac)
    return points[leg] + frac[:, None] * (points[leg + 1] - points[leg])


def generate_trajectories(
    objects: int,
    frames: int,
    rng: np.random.Generator,
    *,
    min_leg: int = 15,
    max_leg: int = 45,
    approach: float = 0.1,
    max_attempts: int = 100,
) -> TrackDataset:
    """Random-waypoint paths in the unit square.

    Each object travels between uniformly drawn waypoints.  Draws are repeated
    until some pair of objects comes within ``approach`` of each other.
    """
    if objects < 2 or frames < 2:
        raise ValueError("need at least 2 objects and 2 frames")
    for _ in range(max_attempts):
        paths = [_waypoint_path(frames, rng, min_leg, max_leg) for _ in range(objects)]
        data = TrackDataset(np.stack(paths, axis=1), tuple(range(objects)))
        if min_pair_distance(data) < approach:
            return data
    raise RuntimeError(f"no close approach within {max_attempts} attempts")


def swap_probability(distance: float, params: SwapModelParams) -> float:
    return params.p_swap * math.exp(-(distance**2) / (2.0 * params.s**2))


def apply_swap_model(data: TrackDataset, params: SwapModelParams, rng: np.random.Generator) -> np.ndarray:
    """Hidden identity assignments per frame, shape (frames, objects).

    Row t maps each track (object slot) to the identity it carries.  Frame 0
    is the identity labelling; at every later frame each pair i < j, in
    lexicographic order, exchanges identities with probability
    p_swap * exp(-|x_i - x_j|^2 / (2 s^2)).
    """
    k = data.objects
    ident = np.arange(k)
    out = np.empty((data.frames, k), dtype=np.intp)
    out[0] = ident
    pairs = list(itertools.combinations(range(k), 2))
    a = np.array([p[0] for p in pairs], dtype=np.intp)
    b = np.array([p[1] for p in pairs], dtype=np.intp)
    for t in range(1, data.frames):
        pos = data.positions[t]
        d2 = ((pos[a] - pos[b]) ** 2).sum(axis=1)
        prob = params.p_swap * np.exp(-d2 / (2.0 * params.s**2))
        hits = rng.random(len(pairs)) < prob
        for idx in np.flatnonzero(hits):
            i, j = a[idx], b[idx]
            ident[i], ident[j] = ident[j], ident[i]
        out[t] = ident
    return out


def export_trajectories(data: TrackDataset, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(HEADER)
        for t in range(data.frames):
            for k, oid in enumerate(data.object_ids):
                x, y = data.positions[t, k]
                w.writerow((t, oid, repr(float(x)), repr(float(y))))


def ingest_trajectories(path: str | Path) -> TrackDataset:
    """Read and validate a trajectory CSV."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"trajectory file not found: {path}")
    rows: dict[int, dict[int, tuple[float, float]]] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise TrajectoryFormatError(f"{path}: empty file")
        if tuple(h.strip() for h in header) != HEADER:
            raise TrajectoryFormatError(f"{path}:1: expected header {','.join(HEADER)}, got {','.join(header)}")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 4:
                raise TrajectoryFormatError(f"{path}:{lineno}: expected 4 fields, got {len(row)}")
            try:
                frame, obj = int(row[0]), int(row[1])
                x, y = float(row[2]), float(row[3])
            except ValueError as exc:
                raise TrajectoryFormatError(f"{path}:{lineno}: {exc}") from None
            if not (math.isfinite(x) and math.isfinite(y)):
                raise TrajectoryFormatError(f"{path}:{lineno}: non-finite coordinate")
            if frame < 0:
                raise TrajectoryFormatError(f"{path}:{lineno}: negative frame index {frame}")
            frame_rows = rows.setdefault(frame, {})
            if obj in frame_rows:
                raise TrajectoryFormatError(f"{path}:{lineno}: duplicate row for object {obj} in frame {frame}")
            frame_rows[obj] = (x, y)
    if not rows:
        raise TrajectoryFormatError(f"{path}: no data rows")
    frames = sorted(rows)
    if frames != list(range(len(frames))):
        missing = sorted(set(range(frames[-1] + 1)) - set(frames))
        raise TrajectoryFormatError(f"{path}: frames must be contiguous from 0; missing frame {missing[0]}")
    ids = sorted(set().union(*(r.keys() for r in rows.values())))
    pos = np.empty((len(frames), len(ids), 2))
    for t in frames:
        for k, oid in enumerate(ids):
            if oid not in rows[t]:
                raise TrajectoryFormatError(f"{path}: frame {t} has no position for object {oid}")
            pos[t, k] = rows[t][oid]
    if len(ids) < 2:
        raise TrajectoryFormatError(f"{path}: need at least 2 objects")
    return TrackDataset(pos, tuple(ids))
