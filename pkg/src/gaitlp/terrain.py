"""Terrain height-maps and the procedural scenario suite.

Height-maps are uniform grids with piecewise-constant cells: the elevation
of every point inside a cell equals the cell value.  Rows run along world
y and columns along world x, so ``elevations[row, col]`` is the cell whose
center sits at ``origin_xy + resolution * (col, row)``.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

LOCAL_MAP_SIZE = 32
LOCAL_MAP_PITCH = 0.04
EDGE_SEARCH_RADIUS = 0.5

SCENARIO_KINDS = ("FlatWorld", "RandomStairs", "Composite")


class OutOfBoundsError(ValueError):
    """A query point falls outside the height-map footprint."""


@dataclass(frozen=True, eq=False)
class HeightMap:
    origin_xy: tuple[float, float]
    resolution: float
    elevations: np.ndarray

    def __post_init__(self):
        elev = np.ascontiguousarray(self.elevations, dtype=np.float64)
        if elev.ndim != 2 or elev.shape[0] < 1 or elev.shape[1] < 1:
            raise ValueError(f"elevations must be a non-empty 2-D grid, got shape {elev.shape}")
        if not self.resolution > 0:
            raise ValueError(f"resolution must be positive, got {self.resolution}")
        if not np.all(np.isfinite(elev)):
            raise ValueError("elevations must all be finite")
        elev.setflags(write=False)
        object.__setattr__(self, "elevations", elev)
        object.__setattr__(self, "origin_xy", (float(self.origin_xy[0]), float(self.origin_xy[1])))
        object.__setattr__(self, "resolution", float(self.resolution))

    @property
    def n_rows(self) -> int:
        return self.elevations.shape[0]

    @property
    def n_cols(self) -> int:
        return self.elevations.shape[1]

    @property
    def bounds(self) -> tuple[float, float, float, float]:
        """Footprint as ``(xmin, xmax, ymin, ymax)`` in world meters."""
        h = 0.5 * self.resolution
        ox, oy = self.origin_xy
        return (ox - h, ox + (self.n_cols - 0.5) * self.resolution,
                oy - h, oy + (self.n_rows - 0.5) * self.resolution)

    def __eq__(self, other):
        if not isinstance(other, HeightMap):
            return NotImplemented
        return (self.origin_xy == other.origin_xy and self.resolution == other.resolution
                and np.array_equal(self.elevations, other.elevations))

    def cell_index(self, xy) -> tuple[np.ndarray, np.ndarray]:
        """Nearest-cell ``(row, col)`` indices for one or many world points."""
        xy = np.asarray(xy, dtype=np.float64)
        col = np.floor((xy[..., 0] - self.origin_xy[0]) / self.resolution + 0.5).astype(np.int64)
        row = np.floor((xy[..., 1] - self.origin_xy[1]) / self.resolution + 0.5).astype(np.int64)
        return row, col

    def contains(self, xy) -> np.ndarray:
        row, col = self.cell_index(xy)
        return (row >= 0) & (row < self.n_rows) & (col >= 0) & (col < self.n_cols)

    def elevations_at(self, xy) -> np.ndarray:
        """Vectorized :func:`elevation_at`; raises if any point is outside."""
        row, col = self.cell_index(xy)
        inside = (row >= 0) & (row < self.n_rows) & (col >= 0) & (col < self.n_cols)
        if not np.all(inside):
            bad = np.asarray(xy, dtype=np.float64).reshape(-1, 2)[~inside.reshape(-1)][0]
            raise OutOfBoundsError(
                f"point ({bad[0]:.4f}, {bad[1]:.4f}) lies outside the map footprint {self.bounds}")
        return self.elevations[row, col]


def elevation_at(heightmap: HeightMap, xy) -> float:
    """Elevation of the cell containing ``xy``."""
    return float(heightmap.elevations_at(np.asarray(xy, dtype=np.float64)[:2]))


def _yaw_matrix(yaw: float) -> np.ndarray:
    c, s = math.cos(yaw), math.sin(yaw)
    return np.array([[c, -s], [s, c]])


def local_offsets(size: int = LOCAL_MAP_SIZE, pitch: float = LOCAL_MAP_PITCH) -> np.ndarray:
    """Base-frame sample offsets of the local map, shape ``(size, size, 2)``.

    Index ``[i, j]`` samples base-frame ``x = (i - (size-1)/2) * pitch`` and
    ``y = (j - (size-1)/2) * pitch``.
    """
    ticks = (np.arange(size) - 0.5 * (size - 1)) * pitch
    gx, gy = np.meshgrid(ticks, ticks, indexing="ij")
    return np.stack([gx, gy], axis=-1)


_LOCAL_OFFSETS = local_offsets()


def local_heightmap(heightmap: HeightMap, base_xy, base_yaw: float, base_z: float) -> np.ndarray:
    """Robocentric 32x32 terrain window at 4 cm pitch, yaw-aligned with the base.

    Values are terrain elevation minus ``base_z``.
    """
    world = np.asarray(base_xy, dtype=np.float64)[:2] + _LOCAL_OFFSETS @ _yaw_matrix(base_yaw).T
    return heightmap.elevations_at(world) - float(base_z)


def min_edge_distance(heightmap: HeightMap, xy, height_threshold: float,
                      search_radius: float = EDGE_SEARCH_RADIUS) -> float:
    """Planar distance from ``xy`` to the nearest elevation edge above threshold.

    An edge is the shared boundary segment of two 4-adjacent cells whose
    elevations differ by more than ``height_threshold``.  Returns ``inf``
    when no such edge lies within ``search_radius``.
    """
    if not height_threshold > 0:
        raise ValueError("height_threshold must be positive")
    p = np.asarray(xy, dtype=np.float64)[:2]
    row, col = heightmap.cell_index(p)
    if not heightmap.contains(p):
        raise OutOfBoundsError(f"point {tuple(p)} lies outside the map footprint {heightmap.bounds}")
    res = heightmap.resolution
    reach = int(math.ceil(search_radius / res)) + 1
    r0, r1 = max(int(row) - reach, 0), min(int(row) + reach + 1, heightmap.n_rows)
    c0, c1 = max(int(col) - reach, 0), min(int(col) + reach + 1, heightmap.n_cols)
    window = heightmap.elevations[r0:r1, c0:c1]
    ox, oy = heightmap.origin_xy
    best = math.inf

    # vertical boundaries between column c and c+1, spanning one row each
    mask = np.abs(np.diff(window, axis=1)) > height_threshold
    if mask.any():
        rr, cc = np.nonzero(mask)
        ex = ox + (cc + c0 + 0.5) * res
        yc = oy + (rr + r0) * res
        dx = np.abs(p[0] - ex)
        dy = np.maximum(np.abs(p[1] - yc) - 0.5 * res, 0.0)
        best = min(best, float(np.min(np.hypot(dx, dy))))
    mask = np.abs(np.diff(window, axis=0)) > height_threshold
    if mask.any():
        rr, cc = np.nonzero(mask)
        ey = oy + (rr + r0 + 0.5) * res
        xc = ox + (cc + c0) * res
        dy = np.abs(p[1] - ey)
        dx = np.maximum(np.abs(p[0] - xc) - 0.5 * res, 0.0)
        best = min(best, float(np.min(np.hypot(dx, dy))))
    return best if best <= search_radius else math.inf


# --------------------------------------------------------------------------
# scenarios

@dataclass(frozen=True)
class FlatSection:
    length: float


@dataclass(frozen=True)
class Gap:
    width: float
    depth: float = 1.0

    def __post_init__(self):
        if not self.width > 0:
            raise ValueError(f"gap width must be positive, got {self.width}")


@dataclass(frozen=True)
class SteppingStones:
    stone_size: float
    spacing: float
    count: int
    depth: float = 1.0

    def __post_init__(self):
        if not (self.stone_size > 0 and self.spacing > 0 and self.count >= 1):
            raise ValueError("stepping stones need positive size, spacing and count")


@dataclass(frozen=True)
class Stairs:
    rise: float
    run: float
    count: int

    def __post_init__(self):
        if self.rise == 0 or not self.run > 0 or self.count < 1:
            raise ValueError("stairs need non-zero rise, positive run and count >= 1")


Feature = FlatSection | Gap | SteppingStones | Stairs
_FEATURE_TYPES = {cls.__name__: cls for cls in (FlatSection, Gap, SteppingStones, Stairs)}


def feature_length(feature: Feature) -> float:
    if isinstance(feature, FlatSection):
        return feature.length
    if isinstance(feature, Gap):
        return feature.width
    if isinstance(feature, SteppingStones):
        return feature.count * feature.stone_size + (feature.count + 1) * feature.spacing
    return feature.run * feature.count


Rect = tuple[float, float, float, float]  # xmin, xmax, ymin, ymax


@dataclass(frozen=True)
class TerrainScenario:
    """A terrain generator recipe.

    ``params`` per kind:

    * FlatWorld: ``side`` (m), ``resolution``, ``elevation``.
    * RandomStairs: ``side``, ``cell_size``, ``resolution``, ``steps`` (the
      elevation offsets drawn per patch), ``incline`` (elevation gained per
      patch along the map diagonal).
    * Composite: ``features`` (sequence of feature records), ``width``,
      ``length`` (optional, defaults to the summed feature lengths),
      ``resolution``.

    ``spawn_region``/``goal_region`` default to regions derived from the
    layout (see :func:`default_regions`).
    """

    kind: str
    seed: int = 0
    params: dict = field(default_factory=dict)
    spawn_region: Rect | None = None
    goal_region: Rect | None = None

    def __post_init__(self):
        if self.kind not in SCENARIO_KINDS:
            raise ValueError(f"unknown scenario kind {self.kind!r}; expected one of {SCENARIO_KINDS}")
        if self.kind == "Composite":
            feats = tuple(_coerce_feature(f) for f in self.params.get("features", ()))
            object.__setattr__(self, "params", {**self.params, "features": feats})
        for name in ("spawn_region", "goal_region"):
            region = getattr(self, name)
            if region is not None:
                region = tuple(float(v) for v in region)
                if len(region) != 4 or region[0] > region[1] or region[2] > region[3]:
                    raise ValueError(f"{name} must be (xmin, xmax, ymin, ymax), got {region}")
                object.__setattr__(self, name, region)

    @property
    def name(self) -> str:
        return f"{self.kind}(seed={self.seed})"

    def to_dict(self) -> dict:
        params = dict(self.params)
        if "features" in params:
            params["features"] = [{"type": type(f).__name__, **dataclasses.asdict(f)}
                                  for f in params["features"]]
        return {"kind": self.kind, "seed": self.seed, "params": params,
                "spawn_region": list(self.spawn_region) if self.spawn_region else None,
                "goal_region": list(self.goal_region) if self.goal_region else None}

    @classmethod
    def from_dict(cls, data: dict) -> "TerrainScenario":
        return cls(kind=data["kind"], seed=int(data.get("seed", 0)), params=dict(data.get("params", {})),
                   spawn_region=data.get("spawn_region"), goal_region=data.get("goal_region"))


def _coerce_feature(f) -> Feature:
    if isinstance(f, tuple(_FEATURE_TYPES.values())):
        return f
    data = dict(f)
    kind = data.pop("type")
    if kind not in _FEATURE_TYPES:
        raise ValueError(f"unknown terrain feature {kind!r}")
    return _FEATURE_TYPES[kind](**data)


def flat_world(side: float = 40.0, resolution: float = 0.04, elevation: float = 0.0, seed: int = 0,
               **kw) -> TerrainScenario:
    return TerrainScenario("FlatWorld", seed, {"side": side, "resolution": resolution,
                                               "elevation": elevation}, **kw)


def random_stairs(side: float = 20.0, cell_size: float = 1.0, seed: int = 0,
                  steps: Sequence[float] = (0.0, 0.05, 0.10), incline: float = 0.05,
                  resolution: float = 0.04, **kw) -> TerrainScenario:
    return TerrainScenario("RandomStairs", seed, {"side": side, "cell_size": cell_size,
                                                  "steps": tuple(steps), "incline": incline,
                                                  "resolution": resolution}, **kw)


def composite(features: Sequence[Feature], width: float = 3.0, length: float | None = None,
              resolution: float = 0.02, seed: int = 0, **kw) -> TerrainScenario:
    params = {"features": tuple(features), "width": width, "resolution": resolution}
    if length is not None:
        params["length"] = length
    return TerrainScenario("Composite", seed, params, **kw)


def _n_cells(extent: float, resolution: float) -> int:
    n = extent / resolution
    if abs(n - round(n)) > 1e-6 or round(n) < 1:
        raise ValueError(f"extent {extent} is not a whole number of {resolution} m cells")
    return int(round(n))


def generate(scenario: TerrainScenario) -> HeightMap:
    """Build the height-map for a scenario; a pure function of the recipe."""
    p = scenario.params
    rng = np.random.default_rng(scenario.seed)
    if scenario.kind == "FlatWorld":
        res = float(p.get("resolution", 0.04))
        n = _n_cells(float(p.get("side", 40.0)), res)
        elev = np.full((n, n), float(p.get("elevation", 0.0)))
        origin = (0.5 * res, 0.5 * res)
    elif scenario.kind == "RandomStairs":
        res = float(p.get("resolution", 0.04))
        side = float(p.get("side", 20.0))
        cell = float(p.get("cell_size", 1.0))
        n = _n_cells(side, res)
        per_patch = _n_cells(cell, res)
        n_patch = _n_cells(side, cell)
        steps = np.asarray(p.get("steps", (0.0, 0.05, 0.10)), dtype=np.float64)
        ii, jj = np.meshgrid(np.arange(n_patch), np.arange(n_patch), indexing="ij")
        patches = float(p.get("incline", 0.05)) * (ii + jj) + rng.choice(steps, size=(n_patch, n_patch))
        elev = np.kron(patches, np.ones((per_patch, per_patch)))
        origin = (0.5 * res, 0.5 * res)
    else:
        res = float(p.get("resolution", 0.02))
        elev, origin = _composite_grid(p)
    hm = HeightMap(origin, res, elev)
    spawn, goal = scenario_regions(scenario, hm)
    for name, region in (("spawn_region", spawn), ("goal_region", goal)):
        xmin, xmax, ymin, ymax = hm.bounds
        if region[0] < xmin or region[1] > xmax or region[2] < ymin or region[3] > ymax:
            raise ValueError(f"{name} {region} is not inside the map footprint {hm.bounds}")
    return hm


def _composite_grid(p: dict) -> tuple[np.ndarray, tuple[float, float]]:
    res = float(p.get("resolution", 0.02))
    width = float(p.get("width", 3.0))
    features = p.get("features", ())
    if not features:
        raise ValueError("composite terrain needs at least one feature")
    total = sum(feature_length(f) for f in features)
    length = float(p.get("length", total))
    if total > length + 1e-9:
        raise ValueError(f"features span {total:.3f} m but the map is only {length:.3f} m long")
    n_cols = _n_cells(length, res)
    n_rows = _n_cells(width, res)
    xc = (np.arange(n_cols) + 0.5) * res
    yc = (np.arange(n_rows) + 0.5) * res - 0.5 * width
    profile = np.zeros((n_rows, n_cols))
    level = 0.0
    x0 = 0.0
    for f in features:
        x1 = x0 + feature_length(f)
        cols = (xc >= x0) & (xc < x1)
        if isinstance(f, FlatSection):
            profile[:, cols] = level
        elif isinstance(f, Gap):
            profile[:, cols] = level - f.depth
        elif isinstance(f, Stairs):
            k = np.floor((xc[cols] - x0) / f.run).astype(int)
            profile[:, cols] = level + f.rise * (k + 1)
            level += f.rise * f.count
        else:
            pitch = f.stone_size + f.spacing
            u = xc[cols] - x0 - f.spacing
            on_x = (u >= 0) & (np.mod(u, pitch) < f.stone_size) & (u < f.count * pitch)
            v = yc + 0.5 * width - f.spacing
            on_y = (v >= 0) & (np.mod(v, pitch) < f.stone_size)
            block = np.where(on_y[:, None] & on_x[None, :], level, level - f.depth)
            profile[:, cols] = block
        x0 = x1
    profile[:, xc >= x0] = level
    return profile, (0.5 * res, 0.5 * res - 0.5 * width)


def default_regions(scenario: TerrainScenario, margin: float = 0.75) -> tuple[Rect, Rect]:
    """Spawn/goal rectangles derived from a scenario's layout.

    Flat and stair maps use the full footprint shrunk by ``margin``.
    Composite courses spawn on the first flat section and place the goal
    on the last one, both kept ``margin`` away from the map border.
    """
    p = scenario.params
    if scenario.kind in ("FlatWorld", "RandomStairs"):
        side = float(p.get("side", 40.0 if scenario.kind == "FlatWorld" else 20.0))
        region = (margin, side - margin, margin, side - margin)
        return region, region
    feats = p["features"]
    if not (isinstance(feats[0], FlatSection) and isinstance(feats[-1], FlatSection)):
        raise ValueError("composite course must start and end with a FlatSection to derive regions")
    half_w = 0.5 * float(p.get("width", 3.0)) - margin
    total = sum(feature_length(f) for f in feats)
    length = float(p.get("length", total))
    spawn = (margin, feats[0].length - 0.25, -half_w, half_w)
    goal = (total - feats[-1].length + 0.25, length - margin, -half_w, half_w)
    for name, r in (("spawn", spawn), ("goal", goal)):
        if r[0] > r[1] or r[2] > r[3]:
            raise ValueError(f"{name} region collapses under a {margin} m margin: {r}")
    return spawn, goal


def scenario_regions(scenario: TerrainScenario, heightmap: HeightMap | None = None) -> tuple[Rect, Rect]:
    spawn, goal = scenario.spawn_region, scenario.goal_region
    if spawn is None or goal is None:
        d_spawn, d_goal = default_regions(scenario)
        spawn = spawn or d_spawn
        goal = goal or d_goal
    return spawn, goal


def footprint_regions(heightmap: HeightMap, margin: float = 0.75) -> tuple[Rect, Rect]:
    """Spawn and goal regions covering a bare map's footprint minus ``margin``."""
    xmin, xmax, ymin, ymax = heightmap.bounds
    region = (xmin + margin, xmax - margin, ymin + margin, ymax - margin)
    if region[0] > region[1] or region[2] > region[3]:
        raise ValueError(f"map {heightmap.bounds} too small for a {margin} m margin")
    return region, region


# --------------------------------------------------------------------------
# serialization

HEIGHTMAP_SCHEMA = "gaitlp.heightmap"
HEIGHTMAP_VERSION = 1


def heightmap_to_dict(hm: HeightMap) -> dict:
    return {"schema": HEIGHTMAP_SCHEMA, "version": HEIGHTMAP_VERSION,
            "origin_xy": list(hm.origin_xy), "resolution": hm.resolution,
            "n_rows": hm.n_rows, "n_cols": hm.n_cols,
            "elevations": hm.elevations.ravel().tolist()}


def heightmap_from_dict(data: dict) -> HeightMap:
    from .io import require_fields, SchemaError

    require_fields(data, ("origin_xy", "resolution", "n_rows", "n_cols", "elevations"), "heightmap")
    n_rows, n_cols = int(data["n_rows"]), int(data["n_cols"])
    elev = np.asarray(data["elevations"], dtype=np.float64)
    if elev.size != n_rows * n_cols:
        raise SchemaError("heightmap.elevations",
                          f"expected {n_rows * n_cols} values, got {elev.size}")
    return HeightMap(tuple(data["origin_xy"]), float(data["resolution"]), elev.reshape(n_rows, n_cols))


def save_heightmap(hm: HeightMap, path) -> None:
    Path(path).write_text(json.dumps(heightmap_to_dict(hm)) + "\n")


def load_heightmap(path) -> HeightMap:
    from .io import read_json

    return heightmap_from_dict(read_json(path))


def export_pgm(hm: HeightMap, path) -> dict:
    """Write a 16-bit binary PGM plus a ``<path>.json`` sidecar holding the scale.

    Pixel value ``v`` maps back to elevation ``z_min + v * scale``.  Image
    rows are map rows flipped so +y points up.
    """
    zmin, zmax = float(hm.elevations.min()), float(hm.elevations.max())
    scale = (zmax - zmin) / 65535.0 if zmax > zmin else 1.0
    pixels = np.rint((hm.elevations - zmin) / scale).astype(">u2")[::-1]
    path = Path(path)
    with path.open("wb") as fh:
        fh.write(f"P5\n{hm.n_cols} {hm.n_rows}\n65535\n".encode("ascii"))
        fh.write(pixels.tobytes())
    sidecar = {"z_min": zmin, "scale": scale, "origin_xy": list(hm.origin_xy),
               "resolution": hm.resolution}
    Path(str(path) + ".json").write_text(json.dumps(sidecar, indent=2) + "\n")
    return sidecar
