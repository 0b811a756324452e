"""Measurement geometry: frequency plans, scan grids, antenna patterns, scenes.

Everything here is immutable after construction and safe to share between
threads.  Angles are degrees, lengths meters, losses dB throughout.

Conventions:
  * x/y span the azimuth plane, z points up.
  * A direction at azimuth ``a`` and elevation ``e`` is the unit vector
    (cos e cos a, cos e sin a, sin e), azimuth counterclockwise from +x.
  * Scan directions and arrival directions point from the receiver toward
    the incoming wave.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    NoNirsPanelWarning,
    NoSpecularGeometryError,
    SceneValidationError,
    ValidationError,
)

SPEED_OF_LIGHT = 299_792_458.0  # m/s, exact

DEFAULT_TX_HEIGHT = 2.0
DEFAULT_RX_HEIGHT = 1.75

_PLANARITY_TOL = 1e-9  # m, coplanarity residual bound


def _vec3(value, what: str) -> np.ndarray:
    arr = np.array(value, dtype=float)
    if arr.shape == (2,):
        raise SceneValidationError(f"{what} must have 3 components, got 2")
    if arr.shape != (3,):
        raise SceneValidationError(f"{what} must have 3 components")
    if not np.all(np.isfinite(arr)):
        raise SceneValidationError(f"{what} must be finite")
    arr.setflags(write=False)
    return arr


def _unit(v: np.ndarray) -> np.ndarray:
    n = float(np.linalg.norm(v))
    if n == 0.0:
        raise SceneValidationError("zero-length direction vector")
    return v / n


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=float)
    arr.setflags(write=False)
    return arr


# ---------------------------------------------------------------------------
# Frequency plan
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class FrequencyPlan:
    """Uniform frequency sweep: first point f_start, last point f_stop."""

    f_start_hz: float
    f_stop_hz: float
    f_step_hz: float

    def __post_init__(self):
        if not (self.f_stop_hz > self.f_start_hz):
            raise ValidationError("frequency plan: f_stop must exceed f_start")
        if not (self.f_step_hz > 0):
            raise ValidationError("frequency plan: f_step must be positive")
        ratio = (self.f_stop_hz - self.f_start_hz) / self.f_step_hz
        if abs(ratio - round(ratio)) > 1e-6 * max(1.0, ratio):
            raise ValidationError(
                "frequency plan: span must be an integer multiple of f_step"
            )
        if round(ratio) + 1 < 2:
            raise ValidationError("frequency plan: needs at least 2 points")

    @property
    def point_count(self) -> int:
        return int(round((self.f_stop_hz - self.f_start_hz) / self.f_step_hz)) + 1

    @property
    def span_hz(self) -> float:
        return self.f_stop_hz - self.f_start_hz

    @property
    def band_label(self) -> str:
        return f"{self.f_start_hz / 1e9:g}-{self.f_stop_hz / 1e9:g}GHz"

    @property
    def center_hz(self) -> float:
        return 0.5 * (self.f_start_hz + self.f_stop_hz)


def frequency_grid(plan: FrequencyPlan) -> np.ndarray:
    """Return the plan's frequencies; first sample f_start, last f_stop."""
    grid = np.linspace(plan.f_start_hz, plan.f_stop_hz, plan.point_count)
    grid.setflags(write=False)
    return grid


# ---------------------------------------------------------------------------
# Frequency sweep (one scan direction worth of complex transfer function)
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class FrequencySweep:
    """Complex transfer-function samples over a frequency plan."""

    plan: FrequencyPlan
    samples: np.ndarray

    def __post_init__(self):
        s = np.array(self.samples, dtype=complex)
        if s.ndim != 1 or s.shape[0] != self.plan.point_count:
            raise ValidationError(
                "sweep: sample count must equal the plan's point count"
            )
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    @property
    def frequencies(self) -> np.ndarray:
        return frequency_grid(self.plan)


# ---------------------------------------------------------------------------
# Scan grid
# ---------------------------------------------------------------------------
def _strictly_increasing(seq: Sequence[float]) -> bool:
    return all(b > a for a, b in zip(seq, seq[1:]))


@dataclass(frozen=True)
class ScanGrid:
    """Receiver scan directions: elevation rows x azimuth columns."""

    azimuth_deg: tuple[float, ...]
    elevation_deg: tuple[float, ...]

    def __post_init__(self):
        az = tuple(float(a) for a in self.azimuth_deg)
        el = tuple(float(e) for e in self.elevation_deg)
        if len(az) == 0 or len(el) == 0:
            raise ValidationError("scan grid: angle lists must be non-empty")
        if not _strictly_increasing(az):
            raise ValidationError("scan grid: azimuth angles must be strictly increasing")
        if not _strictly_increasing(el):
            raise ValidationError("scan grid: elevation angles must be strictly increasing")
        if az[0] < 0.0 or az[-1] >= 360.0:
            raise ValidationError("scan grid: azimuth must lie in [0, 360)")
        if el[0] < -90.0 or el[-1] > 90.0:
            raise ValidationError("scan grid: elevation must lie in [-90, 90]")
        object.__setattr__(self, "azimuth_deg", az)
        object.__setattr__(self, "elevation_deg", el)

    @classmethod
    def default(cls) -> "ScanGrid":
        # 10 degree steps: azimuth full circle, elevation -20..20
        return cls(
            azimuth_deg=tuple(float(a) for a in range(0, 360, 10)),
            elevation_deg=tuple(float(e) for e in range(-20, 30, 10)),
        )

    @property
    def n_azimuth(self) -> int:
        return len(self.azimuth_deg)

    @property
    def n_elevation(self) -> int:
        return len(self.elevation_deg)

    def direction(self, el_index: int, az_index: int) -> np.ndarray:
        return direction_vector(self.elevation_deg[el_index], self.azimuth_deg[az_index])

    def direction_vectors(self) -> np.ndarray:
        """All scan directions, shape (n_elevation, n_azimuth, 3)."""
        el = np.deg2rad(np.asarray(self.elevation_deg))[:, None]
        az = np.deg2rad(np.asarray(self.azimuth_deg))[None, :]
        out = np.stack(
            [
                np.cos(el) * np.cos(az),
                np.cos(el) * np.sin(az),
                np.sin(el) * np.ones_like(az),
            ],
            axis=-1,
        )
        out.setflags(write=False)
        return out

    def all_indices(self) -> frozenset[tuple[int, int]]:
        return frozenset(
            (i, j) for i in range(self.n_elevation) for j in range(self.n_azimuth)
        )


def direction_vector(el_deg: float, az_deg: float) -> np.ndarray:
    el = math.radians(el_deg)
    az = math.radians(az_deg)
    return np.array(
        [math.cos(el) * math.cos(az), math.cos(el) * math.sin(az), math.sin(el)]
    )


# ---------------------------------------------------------------------------
# Antenna pattern
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class AntennaPattern:
    """Gaussian mainlobe in dB: gain(theta) = G0 - 12 (theta/hpbw)^2.

    The quadratic coefficient puts the -3 dB point exactly at hpbw/2.
    No sidelobes and no floor; far off boresight the gain keeps falling.
    """

    boresight_gain_dbi: float
    hpbw_deg: float
    model: str = "gaussian-mainlobe"

    def __post_init__(self):
        if not math.isfinite(self.boresight_gain_dbi):
            raise ValidationError("antenna pattern: boresight gain must be finite")
        if not (0.0 < self.hpbw_deg < 180.0):
            raise ValidationError("antenna pattern: hpbw must lie in (0, 180) degrees")
        if self.model != "gaussian-mainlobe":
            raise ValidationError("antenna pattern: unknown model")

    def gain_dbi(self, theta_deg):
        theta = np.asarray(theta_deg, dtype=float)
        g = self.boresight_gain_dbi - 12.0 * (theta / self.hpbw_deg) ** 2
        return float(g) if np.isscalar(theta_deg) else g

    def amplitude(self, theta_deg):
        """Linear field amplitude factor 10^(gain/20)."""
        return 10.0 ** (np.asarray(self.gain_dbi(theta_deg)) / 20.0)


# Measurement-default antennas: WR2.8 waveguide at the Tx, horn at the Rx.
DEFAULT_TX_PATTERN = AntennaPattern(boresight_gain_dbi=7.0, hpbw_deg=30.0)
DEFAULT_RX_PATTERN = AntennaPattern(boresight_gain_dbi=25.0, hpbw_deg=8.0)


# ---------------------------------------------------------------------------
# Reflection loss (constant or piecewise-linear in incidence angle)
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class LossTable:
    """Per-reflection loss vs incidence angle; one entry means constant loss.

    Lookup clamps outside the tabulated angle range.
    """

    points: tuple[tuple[float, float], ...]

    def __post_init__(self):
        pts = tuple((float(a), float(l)) for a, l in self.points)
        if len(pts) == 0:
            raise SceneValidationError("loss table: needs at least one entry")
        angles = [a for a, _ in pts]
        if not _strictly_increasing(angles):
            raise SceneValidationError("loss table: angles must be strictly increasing")
        if angles[0] < 0.0 or angles[-1] > 90.0:
            raise SceneValidationError("loss table: angles must lie in [0, 90]")
        if any(l < 0.0 for _, l in pts):
            raise SceneValidationError("loss table: material_loss must be >= 0 dB")
        object.__setattr__(self, "points", pts)

    @classmethod
    def constant(cls, loss_db: float) -> "LossTable":
        return cls(points=((0.0, float(loss_db)),))

    def loss_db(self, incidence_deg: float) -> float:
        angles = [a for a, _ in self.points]
        losses = [l for _, l in self.points]
        return float(np.interp(incidence_deg, angles, losses))

    def min_loss_db(self) -> float:
        return min(l for _, l in self.points)


def _as_loss(value) -> LossTable:
    if isinstance(value, LossTable):
        return value
    if isinstance(value, (int, float)):
        return LossTable.constant(float(value))
    return LossTable(points=tuple((a, l) for a, l in value))


# ---------------------------------------------------------------------------
# Planar rectangle
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class Rectangle:
    """Planar rectangle given by 4 corners in perimeter order."""

    corners: np.ndarray  # (4, 3)

    def __post_init__(self):
        c = np.array(self.corners, dtype=float)
        if c.shape != (4, 3):
            raise SceneValidationError("rectangle: needs exactly 4 corner points in 3-D")
        u = c[1] - c[0]
        v = c[3] - c[0]
        lu, lv = np.linalg.norm(u), np.linalg.norm(v)
        if lu == 0.0 or lv == 0.0:
            raise SceneValidationError("rectangle: degenerate (zero-length edge)")
        n = np.cross(u, v)
        ln = np.linalg.norm(n)
        if ln == 0.0:
            raise SceneValidationError("rectangle: degenerate (collinear edges)")
        n = n / ln
        residual = abs(float(np.dot(c[2] - c[0], n)))
        if residual > _PLANARITY_TOL:
            raise SceneValidationError(
                f"rectangle: coplanarity residual {residual:.3e} m exceeds 1e-9 m"
            )
        if np.linalg.norm(c[2] - (c[0] + u + v)) > 1e-6 * max(lu, lv):
            raise SceneValidationError("rectangle: corners do not form a parallelogram")
        if abs(float(np.dot(u, v))) > 1e-7 * lu * lv:
            raise SceneValidationError("rectangle: adjacent edges are not perpendicular")
        c.setflags(write=False)
        object.__setattr__(self, "corners", c)
        object.__setattr__(self, "_origin", _readonly(c[0]))
        object.__setattr__(self, "_u", _readonly(u))
        object.__setattr__(self, "_v", _readonly(v))
        object.__setattr__(self, "_normal", _readonly(n))

    @classmethod
    def from_center(cls, center, u_dir, v_dir, width: float, height: float) -> "Rectangle":
        """Rectangle centered at ``center``; width along u_dir, height along v_dir."""
        center = np.asarray(center, dtype=float)
        u = _unit(np.asarray(u_dir, dtype=float)) * (width / 2.0)
        v = _unit(np.asarray(v_dir, dtype=float)) * (height / 2.0)
        return cls(corners=np.array([center - u - v, center + u - v, center + u + v, center - u + v]))

    @property
    def origin(self) -> np.ndarray:
        return self._origin

    @property
    def u(self) -> np.ndarray:
        return self._u

    @property
    def v(self) -> np.ndarray:
        return self._v

    @property
    def normal(self) -> np.ndarray:
        return self._normal

    @property
    def center(self) -> np.ndarray:
        return self._origin + 0.5 * self._u + 0.5 * self._v

    def local_coords(self, point) -> tuple[float, float, float]:
        """(s, t, plane distance): point = origin + s u + t v + dist * normal."""
        w = np.asarray(point, dtype=float) - self._origin
        s = float(np.dot(w, self._u) / np.dot(self._u, self._u))
        t = float(np.dot(w, self._v) / np.dot(self._v, self._v))
        dist = float(np.dot(w, self._normal))
        return s, t, dist

    def contains(self, point, tol: float = 1e-9) -> bool:
        s, t, dist = self.local_coords(point)
        span = max(np.linalg.norm(self._u), np.linalg.norm(self._v))
        if abs(dist) > max(tol, 1e-12 * span):
            return False
        pad = tol / np.linalg.norm(self._u), tol / np.linalg.norm(self._v)
        return -pad[0] <= s <= 1.0 + pad[0] and -pad[1] <= t <= 1.0 + pad[1]

    def mirror(self, point) -> np.ndarray:
        """Mirror image of a point across the rectangle's plane."""
        p = np.asarray(point, dtype=float)
        d = float(np.dot(p - self._origin, self._normal))
        return p - 2.0 * d * self._normal

    def segment_plane_parameter(self, p, q) -> float | None:
        """Parameter t in [0,1] where segment p->q crosses the plane, else None."""
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        denom = float(np.dot(q - p, self._normal))
        if abs(denom) < 1e-15:
            return None
        t = float(np.dot(self._origin - p, self._normal)) / denom
        if 0.0 <= t <= 1.0:
            return t
        return None

    def intersect_segment(self, p, q, lo: float = 0.0, hi: float = 1.0):
        """Intersection point of segment p->q with the rectangle, or None.

        Only crossings with parameter in [lo, hi] count.
        """
        t = self.segment_plane_parameter(p, q)
        if t is None or not (lo <= t <= hi):
            return None
        point = np.asarray(p, dtype=float) + t * (np.asarray(q, dtype=float) - np.asarray(p, dtype=float))
        if self.contains(point):
            return t, point
        return None

    def intersect_ray(self, origin, direction, min_range: float = 1e-9):
        """First intersection of the ray origin + r*direction (r > min_range)."""
        o = np.asarray(origin, dtype=float)
        d = np.asarray(direction, dtype=float)
        denom = float(np.dot(d, self._normal))
        if abs(denom) < 1e-15:
            return None
        r = float(np.dot(self._origin - o, self._normal)) / denom
        if r <= min_range:
            return None
        point = o + r * d
        if self.contains(point):
            return r, point
        return None


# ---------------------------------------------------------------------------
# Walls and reflector panels
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class Wall:
    rectangle: Rectangle
    material_loss: LossTable

    def __post_init__(self):
        object.__setattr__(self, "material_loss", _as_loss(self.material_loss))


@dataclass(frozen=True)
class NirsPanel:
    """Reflector panel subdivided into activatable sub-panels.

    Sub-panel (row, col): rows run along the rectangle's v edge, columns
    along u.  Default subdivision is 3x3 with every cell active.
    """

    rectangle: Rectangle
    material_loss: LossTable
    subdivision: tuple[int, int] = (3, 3)
    active_cells: frozenset[tuple[int, int]] | None = None  # None = all

    def __post_init__(self):
        object.__setattr__(self, "material_loss", _as_loss(self.material_loss))
        rows, cols = self.subdivision
        if rows < 1 or cols < 1:
            raise SceneValidationError("panel: subdivision must be at least 1x1")
        if self.active_cells is not None:
            cells = frozenset((int(r), int(c)) for r, c in self.active_cells)
            for r, c in cells:
                if not (0 <= r < rows and 0 <= c < cols):
                    raise SceneValidationError(
                        f"panel: active cell ({r},{c}) outside subdivision {rows}x{cols}"
                    )
            object.__setattr__(self, "active_cells", cells)

    @property
    def n_rows(self) -> int:
        return self.subdivision[0]

    @property
    def n_cols(self) -> int:
        return self.subdivision[1]

    def active(self) -> frozenset[tuple[int, int]]:
        if self.active_cells is None:
            return frozenset(
                (r, c) for r in range(self.n_rows) for c in range(self.n_cols)
            )
        return self.active_cells

    def cell_rectangle(self, row: int, col: int) -> Rectangle:
        rect = self.rectangle
        rows, cols = self.subdivision
        o = rect.origin + rect.u * (col / cols) + rect.v * (row / rows)
        u = rect.u / cols
        v = rect.v / rows
        return Rectangle(corners=np.array([o, o + u, o + u + v, o + v]))

    def active_rectangles(self) -> list[tuple[tuple[int, int], Rectangle]]:
        return [((r, c), self.cell_rectangle(r, c)) for r, c in sorted(self.active())]


# ---------------------------------------------------------------------------
# Scene
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class Surface:
    """A reflecting (and blocking) rectangle with an id, used by ray tracing."""

    surface_id: str
    rectangle: Rectangle
    material_loss: LossTable
    kind: str  # "wall" | "panel"


@dataclass(frozen=True)
class Scene:
    walls: tuple[Wall, ...]
    nirs_panels: tuple[NirsPanel, ...]
    tx_position: np.ndarray
    tx_boresight: np.ndarray
    rx_positions: np.ndarray  # (n, 3)
    tx_pattern: AntennaPattern = DEFAULT_TX_PATTERN
    rx_pattern: AntennaPattern = DEFAULT_RX_PATTERN
    frequency_plan: FrequencyPlan | None = None
    scan_grid: ScanGrid = field(default_factory=ScanGrid.default)
    tx_height: float = DEFAULT_TX_HEIGHT
    rx_height: float = DEFAULT_RX_HEIGHT

    def __post_init__(self):
        object.__setattr__(self, "walls", tuple(self.walls))
        object.__setattr__(self, "nirs_panels", tuple(self.nirs_panels))
        object.__setattr__(self, "tx_position", _vec3(self.tx_position, "tx position"))
        object.__setattr__(self, "tx_boresight", _readonly(_unit(np.asarray(self.tx_boresight, dtype=float))))
        rx = np.array(self.rx_positions, dtype=float)
        if rx.ndim != 2 or rx.shape[1] != 3 or rx.shape[0] < 1:
            raise SceneValidationError("scene: rx positions must be an (n, 3) array, n >= 1")
        rx.setflags(write=False)
        object.__setattr__(self, "rx_positions", rx)

    @property
    def n_rx(self) -> int:
        return int(self.rx_positions.shape[0])

    def rx_position(self, rx_index: int) -> np.ndarray:
        if not (0 <= rx_index < self.n_rx):
            raise SceneValidationError(
                f"scene: rx index {rx_index} out of range (n_rx={self.n_rx})"
            )
        return self.rx_positions[rx_index]

    def surfaces(self) -> list[Surface]:
        """Walls plus every active sub-panel, in a stable id order."""
        out = [
            Surface(f"wall{i}", w.rectangle, w.material_loss, "wall")
            for i, w in enumerate(self.walls)
        ]
        for p_idx, panel in enumerate(self.nirs_panels):
            for (r, c), rect in panel.active_rectangles():
                out.append(
                    Surface(f"panel{p_idx}[{r},{c}]", rect, panel.material_loss, "panel")
                )
        return out

    # Convenience variants used by paired with/without comparisons.
    def without_panels(self) -> "Scene":
        return replace(self, nirs_panels=())

    def with_panel_cells(self, active: Iterable[tuple[int, int]] | None, panel_index: int = 0) -> "Scene":
        """Same scene with panel ``panel_index`` restricted to the given cells."""
        panels = list(self.nirs_panels)
        cells = None if active is None else frozenset(active)
        panels[panel_index] = replace(panels[panel_index], active_cells=cells)
        return replace(self, nirs_panels=tuple(panels))


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------
def nirs_angle_set(
    scene: Scene, rx_index: int, grid: ScanGrid | None = None
) -> frozenset[tuple[int, int]]:
    """Scan-grid directions whose ray from the Rx hits an active sub-panel.

    Returns (elevation_index, azimuth_index) pairs.  A scene without panels
    yields the empty set and a NoNirsPanelWarning rather than an error.
    Occlusion by walls is not considered; this is the pure view geometry.
    """
    grid = grid or scene.scan_grid
    rx = scene.rx_position(rx_index)
    rects = [rect for panel in scene.nirs_panels for _, rect in panel.active_rectangles()]
    if not rects:
        warnings.warn("scene has no NIRS panel; angle set is empty", NoNirsPanelWarning)
        return frozenset()
    hits = set()
    for i in range(grid.n_elevation):
        for j in range(grid.n_azimuth):
            d = grid.direction(i, j)
            if any(rect.intersect_ray(rx, d) is not None for rect in rects):
                hits.add((i, j))
    return frozenset(hits)


def _azimuth_angle_to_normal(direction: np.ndarray, normal: np.ndarray) -> float:
    """Unsigned azimuth-plane angle between a direction and a surface normal."""
    d = np.array([direction[0], direction[1]])
    n = np.array([normal[0], normal[1]])
    nd, nn = np.linalg.norm(d), np.linalg.norm(n)
    if nn < 1e-12:
        raise SceneValidationError(
            "reflection angle: panel normal has no azimuth-plane component"
        )
    if nd < 1e-12:
        return 0.0
    c = abs(float(np.dot(d, n)) / (nd * nn))
    return math.degrees(math.acos(min(1.0, c)))


def specular_point(scene: Scene, rx_index: int, panel_index: int = 0) -> np.ndarray:
    """Specular reflection point of Tx -> panel -> Rx on the panel rectangle.

    Raises NoSpecularGeometryError when the mirror construction misses the
    panel or Tx and Rx sit on opposite sides of its plane.
    """
    if not scene.nirs_panels:
        raise SceneValidationError("scene has no NIRS panel")
    rect = scene.nirs_panels[panel_index].rectangle
    tx = scene.tx_position
    rx = scene.rx_position(rx_index)
    side_tx = float(np.dot(tx - rect.origin, rect.normal))
    side_rx = float(np.dot(rx - rect.origin, rect.normal))
    if side_tx * side_rx < 0:
        raise NoSpecularGeometryError(
            "no specular geometry: Tx and Rx on opposite sides of the panel plane"
        )
    image = rect.mirror(tx)
    hit = rect.intersect_segment(image, rx, lo=0.0, hi=1.0)
    if hit is None:
        raise NoSpecularGeometryError(
            "no specular geometry: mirror ray misses the panel rectangle"
        )
    return hit[1]


def reflection_angle(
    scene: Scene,
    rx_index: int,
    panel_index: int = 0,
    fallback_to_center: bool = False,
) -> float:
    """Azimuth-plane angle between the reflected direction and the panel normal.

    Measured at the specular point of the Tx -> panel -> Rx hop, in [0, 90)
    degrees; elevation offsets are projected out.  Without specular geometry
    this raises, unless ``fallback_to_center`` asks for the panel-center
    approximation (angle of incidence of the Tx ray at the panel center).
    """
    if not scene.nirs_panels:
        raise SceneValidationError("scene has no NIRS panel")
    rect = scene.nirs_panels[panel_index].rectangle
    try:
        point = specular_point(scene, rx_index, panel_index)
    except NoSpecularGeometryError:
        if not fallback_to_center:
            raise
        incident = rect.center - scene.tx_position
        return _azimuth_angle_to_normal(incident, rect.normal)
    reflected = scene.rx_position(rx_index) - point
    return _azimuth_angle_to_normal(reflected, rect.normal)


def rx_link_geometry(
    scene: Scene, rx_index: int, panel_index: int = 0
) -> tuple[float, bool, float, float]:
    """(reflection angle deg, specular?, d1 Tx->point, d2 point->Rx).

    Falls back to the panel center, flagged non-specular, when the mirror
    construction misses the panel.
    """
    rect = scene.nirs_panels[panel_index].rectangle
    try:
        point = specular_point(scene, rx_index, panel_index)
        spec = True
        phi = _azimuth_angle_to_normal(scene.rx_position(rx_index) - point, rect.normal)
    except NoSpecularGeometryError:
        point = rect.center
        spec = False
        phi = _azimuth_angle_to_normal(point - scene.tx_position, rect.normal)
    d1 = float(np.linalg.norm(point - scene.tx_position))
    d2 = float(np.linalg.norm(scene.rx_position(rx_index) - point))
    return phi, spec, d1, d2


# ---------------------------------------------------------------------------
# Scene files (strict JSON schema)
# ---------------------------------------------------------------------------
_TOP_KEYS = {"walls", "nirs_panels", "tx", "rx", "frequency_plan", "scan_grid"}


def _reject_unknown(obj: dict, allowed: set[str], context: str) -> None:
    unknown = set(obj) - allowed
    if unknown:
        raise SceneValidationError(
            f"scene file: unknown key(s) {sorted(unknown)} in {context}"
        )


def _position3(value, height: float, what: str) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.shape == (2,):
        arr = np.array([arr[0], arr[1], height])
    if arr.shape != (3,):
        raise SceneValidationError(f"scene file: {what} must be [x,y] or [x,y,z]")
    return arr


def _loss_from_json(value) -> LossTable:
    if isinstance(value, (int, float)):
        return LossTable.constant(float(value))
    return LossTable(points=tuple((float(a), float(l)) for a, l in value))


def _pattern_from_json(obj, default: AntennaPattern) -> AntennaPattern:
    if obj is None:
        return default
    _reject_unknown(obj, {"gain_dbi", "hpbw_deg"}, "pattern")
    return AntennaPattern(
        boresight_gain_dbi=float(obj["gain_dbi"]), hpbw_deg=float(obj["hpbw_deg"])
    )


def scene_from_dict(data: dict) -> Scene:
    _reject_unknown(data, _TOP_KEYS, "top level")
    for key in ("walls", "tx", "rx", "frequency_plan"):
        if key not in data:
            raise SceneValidationError(f"scene file: missing required key '{key}'")

    walls = []
    for w in data["walls"]:
        _reject_unknown(w, {"corners", "material_loss_db"}, "wall")
        walls.append(
            Wall(
                rectangle=Rectangle(corners=np.asarray(w["corners"], dtype=float)),
                material_loss=_loss_from_json(w["material_loss_db"]),
            )
        )

    panels = []
    for p in data.get("nirs_panels", []):
        _reject_unknown(
            p, {"corners", "material_loss_db", "subdivision", "active_cells"}, "nirs panel"
        )
        active = p.get("active_cells", "all")
        cells = None if active == "all" else frozenset((int(r), int(c)) for r, c in active)
        panels.append(
            NirsPanel(
                rectangle=Rectangle(corners=np.asarray(p["corners"], dtype=float)),
                material_loss=_loss_from_json(p["material_loss_db"]),
                subdivision=tuple(int(x) for x in p.get("subdivision", (3, 3))),
                active_cells=cells,
            )
        )

    tx = data["tx"]
    _reject_unknown(tx, {"position", "boresight", "height_m", "pattern"}, "tx")
    tx_height = float(tx.get("height_m", DEFAULT_TX_HEIGHT))
    tx_pos = _position3(tx["position"], tx_height, "tx position")
    boresight = np.asarray(tx["boresight"], dtype=float)
    if boresight.shape == (2,):
        boresight = np.array([boresight[0], boresight[1], 0.0])

    rx = data["rx"]
    _reject_unknown(rx, {"positions", "height_m", "pattern"}, "rx")
    rx_height = float(rx.get("height_m", DEFAULT_RX_HEIGHT))
    rx_pos = np.array([_position3(p, rx_height, "rx position") for p in rx["positions"]])

    fp = data["frequency_plan"]
    _reject_unknown(fp, {"f_start_hz", "f_stop_hz", "f_step_hz"}, "frequency plan")
    plan = FrequencyPlan(
        f_start_hz=float(fp["f_start_hz"]),
        f_stop_hz=float(fp["f_stop_hz"]),
        f_step_hz=float(fp["f_step_hz"]),
    )

    if "scan_grid" in data:
        sg = data["scan_grid"]
        _reject_unknown(sg, {"azimuth_deg", "elevation_deg"}, "scan grid")
        grid = ScanGrid(
            azimuth_deg=tuple(float(a) for a in sg["azimuth_deg"]),
            elevation_deg=tuple(float(e) for e in sg["elevation_deg"]),
        )
    else:
        grid = ScanGrid.default()

    return Scene(
        walls=tuple(walls),
        nirs_panels=tuple(panels),
        tx_position=tx_pos,
        tx_boresight=boresight,
        rx_positions=rx_pos,
        tx_pattern=_pattern_from_json(tx.get("pattern"), DEFAULT_TX_PATTERN),
        rx_pattern=_pattern_from_json(rx.get("pattern"), DEFAULT_RX_PATTERN),
        frequency_plan=plan,
        scan_grid=grid,
        tx_height=tx_height,
        rx_height=rx_height,
    )


def scene_to_dict(scene: Scene) -> dict:
    def loss_json(loss: LossTable):
        if len(loss.points) == 1 and loss.points[0][0] == 0.0:
            return loss.points[0][1]
        return [[a, l] for a, l in loss.points]

    data: dict = {
        "walls": [
            {"corners": w.rectangle.corners.tolist(), "material_loss_db": loss_json(w.material_loss)}
            for w in scene.walls
        ],
        "nirs_panels": [
            {
                "corners": p.rectangle.corners.tolist(),
                "material_loss_db": loss_json(p.material_loss),
                "subdivision": list(p.subdivision),
                "active_cells": "all" if p.active_cells is None else sorted([list(c) for c in p.active_cells]),
            }
            for p in scene.nirs_panels
        ],
        "tx": {
            "position": scene.tx_position.tolist(),
            "boresight": scene.tx_boresight.tolist(),
            "height_m": scene.tx_height,
            "pattern": {
                "gain_dbi": scene.tx_pattern.boresight_gain_dbi,
                "hpbw_deg": scene.tx_pattern.hpbw_deg,
            },
        },
        "rx": {
            "positions": scene.rx_positions.tolist(),
            "height_m": scene.rx_height,
            "pattern": {
                "gain_dbi": scene.rx_pattern.boresight_gain_dbi,
                "hpbw_deg": scene.rx_pattern.hpbw_deg,
            },
        },
        "frequency_plan": {
            "f_start_hz": scene.frequency_plan.f_start_hz,
            "f_stop_hz": scene.frequency_plan.f_stop_hz,
            "f_step_hz": scene.frequency_plan.f_step_hz,
        },
        "scan_grid": {
            "azimuth_deg": list(scene.scan_grid.azimuth_deg),
            "elevation_deg": list(scene.scan_grid.elevation_deg),
        },
    }
    return data


def load_scene(path) -> Scene:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SceneValidationError(f"scene file: invalid JSON ({exc})") from exc
    return scene_from_dict(data)


def save_scene(scene: Scene, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(scene_to_dict(scene), fh, indent=2, sort_keys=True)
        fh.write("\n")
