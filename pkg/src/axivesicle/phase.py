"""Two-valued phase layouts on the parameter interval.

A layout is the piecewise-constant function ``phi: [0, 1] -> {0, 1}`` given
by its value on the first segment and its ordered jump locations. Value 1
marks phase A, value 0 phase B. Jumps sit at arbitrary parameter values, not
only at grid nodes; integrals against ``phi`` split the straddling grid cell
exactly at each jump.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .geometry import GeneratorCurve, d1, trapezoid_weights

__all__ = [
    "PhaseError",
    "PhaseLayout",
    "phase_at",
    "phase_area",
    "interface_length",
    "complement",
    "jump_count",
    "toggle_segment",
    "move_jump",
    "insert_jump_pair",
    "remove_jump_pair",
    "default_min_separation",
    "indicator_weights",
    "interpolate",
    "interpolation_slope",
]


class PhaseError(ValueError):
    """Invalid layout, evaluation at a jump, or an invalid editing move."""


@dataclass(frozen=True)
class PhaseLayout:
    leading_value: int = 1
    jumps: tuple[float, ...] = ()

    def __post_init__(self):
        if self.leading_value not in (0, 1):
            raise PhaseError(f"leading_value must be 0 or 1, got {self.leading_value!r}")
        jumps = tuple(float(t) for t in self.jumps)
        if any(not (0.0 < t < 1.0) for t in jumps):
            raise PhaseError("jump locations must lie strictly inside (0, 1)")
        if any(b <= a for a, b in zip(jumps, jumps[1:])):
            raise PhaseError("jump locations must be strictly increasing")
        object.__setattr__(self, "jumps", jumps)

    @classmethod
    def constant(cls, value: int) -> "PhaseLayout":
        return cls(value, ())

    @property
    def segment_values(self) -> tuple[int, ...]:
        """Value on each of the ``J + 1`` segments, left to right."""
        v = self.leading_value
        return tuple((v + k) % 2 for k in range(len(self.jumps) + 1))

    def intervals(self, value: int = 1) -> list[tuple[float, float]]:
        """Sub-intervals of ``[0, 1]`` on which ``phi == value``."""
        edges = (0.0, *self.jumps, 1.0)
        return [
            (edges[k], edges[k + 1])
            for k, v in enumerate(self.segment_values)
            if v == value
        ]


def default_min_separation(n_segments: int) -> float:
    return 1.0 / (4 * n_segments)


def jump_count(layout: PhaseLayout) -> int:
    return len(layout.jumps)


def phase_at(layout: PhaseLayout, t: float) -> int:
    if not 0.0 <= t <= 1.0:
        raise PhaseError(f"parameter {t} outside [0, 1]")
    if t in layout.jumps:
        raise PhaseError(f"phase is undefined at the jump t = {t}")
    below = int(np.searchsorted(layout.jumps, t))
    return (layout.leading_value + below) % 2


def complement(layout: PhaseLayout) -> PhaseLayout:
    return PhaseLayout(1 - layout.leading_value, layout.jumps)


# --- quadrature against the indicator --------------------------------------


def _hat_integrals(a: float, b: float, n: int, out: np.ndarray) -> None:
    """Add ``int_a^b hat_i(t) dt`` to ``out[i]`` for every node ``i``."""
    if b <= a:
        return
    h = 1.0 / n
    k0 = min(int(np.floor(a * n)), n - 1)
    k1 = min(int(np.ceil(b * n)), n)
    k = np.arange(k0, k1)
    up = np.clip(a * n - k, 0.0, 1.0)
    uq = np.clip(b * n - k, 0.0, 1.0)
    left = h * ((uq - 0.5 * uq * uq) - (up - 0.5 * up * up))
    right = h * 0.5 * (uq * uq - up * up)
    np.add.at(out, k, left)
    np.add.at(out, k + 1, right)


def indicator_weights(layout: PhaseLayout, n_segments: int, value: int = 1) -> np.ndarray:
    """Node weights ``w`` with ``w @ f == int phi_value(t) L_f(t) dt``.

    ``L_f`` is the piecewise-linear interpolant of nodal values ``f`` and
    ``phi_value`` the indicator of ``{phi == value}``. Without jumps these
    are the trapezoid weights (or zeros).
    """
    if not layout.jumps:
        if layout.leading_value == value:
            return trapezoid_weights(n_segments)
        return np.zeros(n_segments + 1)
    w = np.zeros(n_segments + 1)
    for a, b in layout.intervals(value):
        _hat_integrals(a, b, n_segments, w)
    return w


def interpolate(values: np.ndarray, t) -> np.ndarray:
    """Piecewise-linear interpolation of nodal ``values`` at parameters ``t``."""
    n = values.size - 1
    return np.interp(t, np.arange(n + 1) / n, values)


def interpolation_slope(values: np.ndarray, t) -> np.ndarray:
    """Derivative of the piecewise-linear interpolant of ``values``.

    At a grid node the one-sided slopes are averaged, which is what a
    central difference of the interpolant returns there.
    """
    n = values.size - 1
    t = np.atleast_1d(np.asarray(t, dtype=float))
    chords = np.diff(values) * n
    pos = t * n
    k = np.clip(np.floor(pos).astype(int), 0, n - 1)
    slope = chords[k]
    on_node = (pos == np.round(pos)) & (pos > 0) & (pos < n)
    if np.any(on_node):
        i = np.round(pos[on_node]).astype(int)
        slope[on_node] = 0.5 * (chords[i - 1] + chords[i])
    return slope


def phase_area(curve: GeneratorCurve, layout: PhaseLayout) -> float:
    """Area of the part of the surface carrying phase A."""
    n = curve.n_segments
    speed = np.hypot(d1(curve.x, curve.h), d1(curve.z, curve.h))
    w = indicator_weights(layout, n, 1)
    return float(2 * np.pi * np.dot(w, curve.x * speed))


def interface_length(curve: GeneratorCurve, layout: PhaseLayout) -> float:
    """Total length of the interface circles between the two phases."""
    if not layout.jumps:
        return 0.0
    radii = interpolate(curve.x, np.asarray(layout.jumps))
    return float(2 * np.pi * np.sum(radii))


# --- editors ---------------------------------------------------------------


def _check_separation(jumps: Sequence[float], min_sep: float) -> None:
    edges = (0.0, *jumps, 1.0)
    gaps = np.diff(edges)
    if min_sep > 0 and np.any(gaps < min_sep):
        raise PhaseError(f"jumps closer than the minimum separation {min_sep}")


def _from_segments(values: Sequence[int], edges: Sequence[float]) -> PhaseLayout:
    """Rebuild a layout from per-segment values, merging equal neighbours."""
    jumps = [
        edges[k + 1] for k in range(len(values) - 1) if values[k] != values[k + 1]
    ]
    return PhaseLayout(int(values[0]), tuple(jumps))


def toggle_segment(layout: PhaseLayout, segment: int) -> PhaseLayout:
    """Flip the phase of one segment; jumps that become trivial disappear."""
    values = list(layout.segment_values)
    if not 0 <= segment < len(values):
        raise PhaseError(f"segment index {segment} out of range")
    values[segment] = 1 - values[segment]
    edges = (0.0, *layout.jumps, 1.0)
    return _from_segments(values, edges)


def move_jump(
    layout: PhaseLayout, index: int, new_t: float, min_sep: float = 0.0
) -> PhaseLayout:
    jumps = list(layout.jumps)
    if not 0 <= index < len(jumps):
        raise PhaseError(f"jump index {index} out of range")
    lo = jumps[index - 1] if index > 0 else 0.0
    hi = jumps[index + 1] if index + 1 < len(jumps) else 1.0
    if not lo < new_t < hi:
        raise PhaseError(
            f"moving jump {index} to {new_t} crosses a neighbour or the boundary"
        )
    jumps[index] = float(new_t)
    _check_separation(jumps, min_sep)
    return PhaseLayout(layout.leading_value, tuple(jumps))


def insert_jump_pair(
    layout: PhaseLayout,
    a: float,
    b: float,
    min_sep: float = 0.0,
    max_jumps: int | None = None,
) -> PhaseLayout:
    """Insert a sub-interval ``(a, b)`` of the opposite phase inside one segment."""
    if not 0.0 < a < b < 1.0:
        raise PhaseError(f"need 0 < a < b < 1, got a={a}, b={b}")
    jumps = layout.jumps
    if np.searchsorted(jumps, a) != np.searchsorted(jumps, b) or a in jumps or b in jumps:
        raise PhaseError("an inserted pair must lie inside a single segment")
    if max_jumps is not None and len(jumps) + 2 > max_jumps:
        raise PhaseError(f"insertion would exceed the jump budget {max_jumps}")
    new = tuple(sorted((*jumps, float(a), float(b))))
    _check_separation(new, min_sep)
    return PhaseLayout(layout.leading_value, new)


def remove_jump_pair(layout: PhaseLayout, index: int) -> PhaseLayout:
    """Delete the adjacent jumps ``index`` and ``index + 1``."""
    jumps = list(layout.jumps)
    if not 0 <= index < len(jumps) - 1:
        raise PhaseError(f"no adjacent jump pair at index {index}")
    del jumps[index : index + 2]
    return PhaseLayout(layout.leading_value, tuple(jumps))
