"""Simulation windows and planar point patterns, plus the CSV/JSON dump format."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

__all__ = ["Window", "PointPattern", "dump_pattern", "load_pattern"]

PROCESS_TAGS = ("PPP", "MaternII", "Thomas", "AlohaThinned", "PalmScenario")


@dataclass(frozen=True)
class Window:
    """Observation window: a disc (center, radius) or an axis-aligned square.

    Squares are described by ``center`` and ``half_side``. Windows replace the
    plane in simulations; samplers pad them internally where edge effects
    would otherwise bias the result.
    """

    shape: str  # "disc" or "square"
    center: tuple[float, float] = (0.0, 0.0)
    radius: float = 0.0
    half_side: float = 0.0

    def __post_init__(self):
        if self.shape not in ("disc", "square"):
            raise ValueError(f"unknown window shape {self.shape!r}")
        if self.shape == "disc" and self.radius <= 0:
            raise ValueError("disc window needs a positive radius")
        if self.shape == "square" and self.half_side <= 0:
            raise ValueError("square window needs a positive half_side")

    @property
    def area(self) -> float:
        if self.shape == "disc":
            return math.pi * self.radius**2
        return (2.0 * self.half_side) ** 2

    def contains(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(points)
        c = np.asarray(self.center)
        if self.shape == "disc":
            return ((pts - c) ** 2).sum(axis=1) <= self.radius**2 * (1 + 1e-12)
        return (np.abs(pts - c) <= self.half_side * (1 + 1e-12)).all(axis=1)

    def sample_uniform(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """n i.i.d. uniform points in the window."""
        c = np.asarray(self.center)
        if self.shape == "disc":
            r = self.radius * np.sqrt(rng.random(n))
            phi = rng.uniform(0.0, 2.0 * np.pi, n)
            return c + np.column_stack([r * np.cos(phi), r * np.sin(phi)])
        return c + rng.uniform(-self.half_side, self.half_side, size=(n, 2))

    def dilated(self, pad: float) -> "Window":
        """Window grown by ``pad`` in every direction (disc stays a disc)."""
        if self.shape == "disc":
            return Window("disc", self.center, radius=self.radius + pad)
        return Window("square", self.center, half_side=self.half_side + pad)

    def boundary_distance(self, points: np.ndarray) -> np.ndarray:
        """Distance from each point to the window boundary (negative outside)."""
        pts = np.atleast_2d(points)
        c = np.asarray(self.center)
        if self.shape == "disc":
            return self.radius - np.linalg.norm(pts - c, axis=1)
        return self.half_side - np.abs(pts - c).max(axis=1)

    def to_json(self) -> dict:
        d = {"shape": self.shape, "center": list(self.center)}
        if self.shape == "disc":
            d["radius"] = self.radius
        else:
            d["half_side"] = self.half_side
        return d

    @staticmethod
    def from_json(d: dict) -> "Window":
        return Window(
            d["shape"],
            tuple(d.get("center", (0.0, 0.0))),
            radius=d.get("radius", 0.0),
            half_side=d.get("half_side", 0.0),
        )


@dataclass
class PointPattern:
    """A finite planar point set with optional marks and generating metadata."""

    points: np.ndarray  # (n, 2)
    window: Window
    nominal_density: float
    process_tag: str
    marks: Optional[np.ndarray] = None
    seed: Optional[int] = None

    def __post_init__(self):
        self.points = np.asarray(self.points, float).reshape(-1, 2)
        if not np.all(np.isfinite(self.points)):
            raise ValueError("point coordinates must be finite")
        if self.marks is not None:
            self.marks = np.asarray(self.marks, float).ravel()
            if self.marks.shape[0] != self.points.shape[0]:
                raise ValueError("marks must align with points")
        if self.nominal_density < 0:
            raise ValueError("nominal density must be non-negative")
        if self.process_tag not in PROCESS_TAGS:
            raise ValueError(f"unknown process tag {self.process_tag!r}")

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def empirical_density(self) -> float:
        return len(self) / self.window.area

    def min_pairwise_distance(self) -> float:
        if len(self) < 2:
            return math.inf
        from scipy.spatial import cKDTree

        tree = cKDTree(self.points)
        d, _ = tree.query(self.points, k=2)
        return float(d[:, 1].min())


def dump_pattern(pattern: PointPattern, csv_path: str | Path) -> None:
    """Write a pattern as ``x,y[,mark]`` CSV with a JSON sidecar of metadata."""
    csv_path = Path(csv_path)
    with_marks = pattern.marks is not None
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "y", "mark"] if with_marks else ["x", "y"])
        for i, (x, y) in enumerate(pattern.points):
            row = [f"{x:.17g}", f"{y:.17g}"]
            if with_marks:
                row.append(f"{pattern.marks[i]:.17g}")
            writer.writerow(row)
    sidecar = {
        "window": pattern.window.to_json(),
        "process_tag": pattern.process_tag,
        "nominal_density": pattern.nominal_density,
        "seed": pattern.seed,
        "n_points": len(pattern),
    }
    csv_path.with_suffix(".json").write_text(json.dumps(sidecar, indent=2) + "\n")


def load_pattern(csv_path: str | Path) -> PointPattern:
    """Inverse of :func:`dump_pattern`."""
    csv_path = Path(csv_path)
    meta = json.loads(csv_path.with_suffix(".json").read_text())
    rows = list(csv.reader(open(csv_path)))
    header, data = rows[0], rows[1:]
    pts = np.array([[float(r[0]), float(r[1])] for r in data]) if data else np.zeros((0, 2))
    marks = None
    if "mark" in header:
        marks = np.array([float(r[2]) for r in data]) if data else np.zeros(0)
    return PointPattern(
        points=pts,
        window=Window.from_json(meta["window"]),
        nominal_density=meta["nominal_density"],
        process_tag=meta["process_tag"],
        marks=marks,
        seed=meta.get("seed"),
    )
