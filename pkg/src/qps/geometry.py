"""Spatial types and the forward delay model of a three-baseline
biphoton interferometric positioning system.

Each baseline is a pair of reflector endpoints with a photon-pair
source/detector station on it. A round trip of the entangled photons from
the station, via the two endpoints, to the user's corner reflector and
back is balanced by a tunable optical delay; the balancing delay length
is the observable. Three baselines give three range-difference equations
whose intersection determines the user position.

All lengths are SI meters, all times seconds, propagation in vacuum.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable

import numpy as np

from .errors import InvalidInputError

#: Vacuum speed of light in m/s (exact by definition).
SPEED_OF_LIGHT = 299_792_458.0

#: Relative tolerance used by the midpoint-source predicate.
MIDPOINT_RTOL = 1e-9


@dataclass(frozen=True)
class Point3:
    """A position in 3-D Cartesian space, in meters.

    All components must be finite; NaN or infinity is rejected at
    construction so downstream operations never see them.
    """

    x: float
    y: float
    z: float

    def __post_init__(self):
        for name in ("x", "y", "z"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise InvalidInputError(f"Point3.{name} must be finite, got {value!r}")
            object.__setattr__(self, name, float(value))

    @classmethod
    def from_array(cls, arr: Iterable[float]) -> "Point3":
        vals = [float(v) for v in arr]
        if len(vals) != 3:
            raise InvalidInputError(f"expected 3 components, got {len(vals)}")
        return cls(*vals)

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=float)

    def norm(self) -> float:
        return math.hypot(self.x, self.y, self.z)


@dataclass(frozen=True)
class Baseline:
    """One interferometer arm pair.

    Attributes:
        endpoint_a: First reflector endpoint.
        endpoint_b: Second reflector endpoint.
        source: Location of the photon-pair source, beam splitter and
            detectors (assumed collocated).
    """

    endpoint_a: Point3
    endpoint_b: Point3
    source: Point3

    def __post_init__(self):
        if self.length == 0.0:
            raise InvalidInputError("baseline endpoints must be distinct")

    @classmethod
    def with_midpoint_source(cls, endpoint_a: Point3, endpoint_b: Point3) -> "Baseline":
        """Build a baseline with the source at the midpoint of the endpoints."""
        mid = Point3(
            0.5 * (endpoint_a.x + endpoint_b.x),
            0.5 * (endpoint_a.y + endpoint_b.y),
            0.5 * (endpoint_a.z + endpoint_b.z),
        )
        return cls(endpoint_a, endpoint_b, mid)

    @cached_property
    def length(self) -> float:
        """Distance between the two endpoints."""
        a, b = self.endpoint_a, self.endpoint_b
        return math.hypot(a.x - b.x, a.y - b.y, a.z - b.z)

    @cached_property
    def source_leg_a(self) -> float:
        """Distance from endpoint_a to the source."""
        a, s = self.endpoint_a, self.source
        return math.hypot(a.x - s.x, a.y - s.y, a.z - s.z)

    @cached_property
    def source_leg_b(self) -> float:
        """Distance from the source to endpoint_b."""
        b, s = self.endpoint_b, self.source
        return math.hypot(b.x - s.x, b.y - s.y, b.z - s.z)

    @cached_property
    def source_path_offset(self) -> float:
        """Constant leg asymmetry ``|A - source| - |source - B|``.

        Zero for a midpoint source; folded into the balanced delay for a
        general source placement.
        """
        return self.source_leg_a - self.source_leg_b

    @property
    def is_midpoint_source(self) -> bool:
        """True when the source is equidistant from both endpoints
        (within ``MIDPOINT_RTOL`` relative tolerance)."""
        return math.isclose(self.source_leg_a, self.source_leg_b, rel_tol=MIDPOINT_RTOL)


@dataclass(frozen=True)
class Constellation:
    """Exactly three baselines defining the spatial reference frame."""

    baselines: tuple[Baseline, Baseline, Baseline]

    def __post_init__(self):
        baselines = tuple(self.baselines)
        if len(baselines) != 3:
            raise InvalidInputError(f"a constellation needs exactly 3 baselines, got {len(baselines)}")
        object.__setattr__(self, "baselines", baselines)

    # Endpoint coordinates stacked as (3, 3) arrays, one row per baseline.
    # Cached because the solver and field scans evaluate the forward model
    # many times against a fixed constellation.

    @cached_property
    def endpoints_a(self) -> np.ndarray:
        return np.array([b.endpoint_a.as_array() for b in self.baselines])

    @cached_property
    def endpoints_b(self) -> np.ndarray:
        return np.array([b.endpoint_b.as_array() for b in self.baselines])

    @cached_property
    def midpoints(self) -> np.ndarray:
        return 0.5 * (self.endpoints_a + self.endpoints_b)

    @cached_property
    def axes(self) -> np.ndarray:
        """Endpoint difference vectors ``A - B``, one row per baseline."""
        return self.endpoints_a - self.endpoints_b

    @cached_property
    def lengths(self) -> np.ndarray:
        return np.array([b.length for b in self.baselines])

    @cached_property
    def source_path_offsets(self) -> np.ndarray:
        return np.array([b.source_path_offset for b in self.baselines])

    def to_json_dict(self) -> dict:
        return {
            "baselines": [
                {
                    "a": [b.endpoint_a.x, b.endpoint_a.y, b.endpoint_a.z],
                    "b": [b.endpoint_b.x, b.endpoint_b.y, b.endpoint_b.z],
                    "source": [b.source.x, b.source.y, b.source.z],
                }
                for b in self.baselines
            ]
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "Constellation":
        try:
            entries = data["baselines"]
        except (TypeError, KeyError):
            raise InvalidInputError("constellation JSON must have a 'baselines' key")
        if not isinstance(entries, list) or len(entries) != 3:
            raise InvalidInputError("'baselines' must be a list of exactly 3 entries")
        baselines = []
        for i, entry in enumerate(entries):
            try:
                baselines.append(
                    Baseline(
                        Point3.from_array(entry["a"]),
                        Point3.from_array(entry["b"]),
                        Point3.from_array(entry["source"]),
                    )
                )
            except (TypeError, KeyError):
                raise InvalidInputError(f"baseline {i}: each entry needs 'a', 'b' and 'source' triples")
        return cls(tuple(baselines))

    def save_json(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json_dict(), indent=2) + "\n")


def load_constellation(path: str | Path) -> Constellation:
    """Load a constellation from the documented JSON schema."""
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise InvalidInputError(f"{path}: not valid JSON ({exc})") from exc
    return Constellation.from_json_dict(data)


@dataclass(frozen=True)
class OpticalDelay:
    """A calibrated transparent delay element in one interferometer arm.

    Attributes:
        thickness_d: Geometric thickness along the optical path, meters.
        index_n: Effective refractive index, >= 1.
    """

    thickness_d: float
    index_n: float

    def __post_init__(self):
        if not (math.isfinite(self.thickness_d) and self.thickness_d >= 0.0):
            raise InvalidInputError(f"delay thickness must be finite and >= 0, got {self.thickness_d!r}")
        if not (math.isfinite(self.index_n) and self.index_n >= 1.0):
            raise InvalidInputError(f"refractive index must be finite and >= 1, got {self.index_n!r}")

    @property
    def delay_length(self) -> float:
        """Excess optical path length ``(n - 1) * d``, meters."""
        return (self.index_n - 1.0) * self.thickness_d

    @property
    def delay_time(self) -> float:
        """Excess propagation time ``(n - 1) * d / c``, seconds."""
        return self.delay_length / SPEED_OF_LIGHT


#: A delay element of zero optical effect.
ZERO_DELAY = OpticalDelay(0.0, 1.0)


def round_trip_times(
    baseline: Baseline, user: Point3, delay: OpticalDelay = ZERO_DELAY
) -> tuple[float, float]:
    """Effective round-trip times of the two photon paths of one baseline.

    Both photons travel station -> endpoint -> user corner reflector and
    back along the same legs; the second path additionally traverses the
    optical delay twice.

    Args:
        baseline: The arm pair being interrogated.
        user: Corner-reflector position.
        delay: Delay element in the endpoint_b arm.

    Returns:
        ``(t_a, t_b)`` in seconds: the endpoint_a-side and endpoint_b-side
        round-trip times.
    """
    d_a = math.dist((user.x, user.y, user.z), (baseline.endpoint_a.x, baseline.endpoint_a.y, baseline.endpoint_a.z))
    d_b = math.dist((user.x, user.y, user.z), (baseline.endpoint_b.x, baseline.endpoint_b.y, baseline.endpoint_b.z))
    t_a = 2.0 / SPEED_OF_LIGHT * (d_a + baseline.source_leg_a)
    t_b = 2.0 / SPEED_OF_LIGHT * (d_b + baseline.source_leg_b + delay.delay_length)
    return t_a, t_b


def balanced_delay(baseline: Baseline, user: Point3) -> float:
    """Optical delay length (meters) that balances one interferometer.

    This is the path-length excess of the endpoint_a leg over the
    endpoint_b leg:

        s = (|user - A| + |A - source|) - (|user - B| + |source - B|)

    Positive s means the endpoint_a leg is longer, i.e. the delay element
    on the endpoint_b side must add s of optical path. For a midpoint
    source the station legs cancel and s reduces to the plain range
    difference |user - A| - |user - B|.

    The range difference is evaluated as ``-2 (u - m) . (A - B) / (|u-A| +
    |u-B|)`` with m the endpoint midpoint, which is algebraically identical
    but avoids the catastrophic cancellation of subtracting two nearly
    equal distances; far-field positioning accuracy depends on this.
    """
    u = user.as_array()
    a = baseline.endpoint_a.as_array()
    b = baseline.endpoint_b.as_array()
    n_a = float(np.linalg.norm(u - a))
    n_b = float(np.linalg.norm(u - b))
    if n_a + n_b == 0.0:
        raise InvalidInputError("user coincides with both baseline endpoints")
    diff = -2.0 * float(np.dot(u - 0.5 * (a + b), a - b)) / (n_a + n_b)
    return diff + baseline.source_path_offset


def forward_delays(constellation: Constellation, user: Point3) -> np.ndarray:
    """Balancing delay lengths of all three baselines, shape ``(3,)``.

    This is the exact forward model that the position solver inverts.
    """
    return delays_at(constellation, user.as_array())


def delays_at(constellation: Constellation, xyz: np.ndarray) -> np.ndarray:
    """Array-level forward model: balancing delays at position ``xyz``.

    Hot-path variant of :func:`forward_delays` operating on a raw
    coordinate array.
    """
    if not np.all(np.isfinite(xyz)):
        raise InvalidInputError(f"position must be finite, got {xyz!r}")
    d_a = np.linalg.norm(xyz - constellation.endpoints_a, axis=1)
    d_b = np.linalg.norm(xyz - constellation.endpoints_b, axis=1)
    denom = d_a + d_b
    if np.any(denom == 0.0):
        raise InvalidInputError("position coincides with both endpoints of a baseline")
    num = -2.0 * np.einsum("ij,ij->i", xyz - constellation.midpoints, constellation.axes)
    return num / denom + constellation.source_path_offsets
