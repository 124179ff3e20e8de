"""From segments to labeled extrusions: features, steadiness time, class.

The steadiness time is the optimization objective: seconds from extrusion
start until the profilometer's 5-sample sliding RMSE first drops below the
threshold set by the fully in-band windows. Extrusions that never get
steady are class 2; extrusions cut before the profilometer ever measured
are class 3; only class 1 carries an objective value.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pandas as pd

from .errors import InsufficientDataError
from .signals import ExtrusionSegment, RawSignal, SignalRoles, UniformFrame

STEADINESS_TOLERANCE = 0.01
STEADINESS_WINDOW = 5
PLATEAU_BAND = 0.02
PLATEAU_SUSTAIN = 3

PROPERTY_STATS = ("min", "max", "mean", "std", "first", "last")


@dataclass(frozen=True)
class PropertyStats:
    minimum: float
    maximum: float
    mean: float
    std: float
    first: float
    last: float


@dataclass(frozen=True)
class ExtruderStart:
    usage: bool
    target_speed: float
    start_acceleration: float


@dataclass(frozen=True)
class SearchPoint:
    """Everything an operator chose (or the plant exhibited) before restart."""

    properties: dict[str, PropertyStats]
    extruders: tuple[ExtruderStart, ...]
    material_first: str
    material_last: str
    material_changed: bool
    die_first: str
    die_last: str
    die_changed: bool
    product_type: str


@dataclass(frozen=True)
class LabeledExtrusion:
    search_point: SearchPoint
    steadiness_time: float | None
    feasibility_class: int

    def __post_init__(self):
        has_time = self.steadiness_time is not None
        if has_time != (self.feasibility_class == 1):
            raise ValueError("steadiness_time present iff feasibility_class == 1")
        if has_time and self.steadiness_time <= 0:
            raise ValueError("steadiness_time must be positive")


def _window_stats(values: np.ndarray) -> PropertyStats:
    return PropertyStats(
        minimum=float(values.min()),
        maximum=float(values.max()),
        mean=float(values.mean()),
        std=float(values.std()),
        first=float(values[0]),
        last=float(values[-1]),
    )


def _extruder_start(active_speeds: np.ndarray) -> ExtruderStart:
    vmax = float(active_speeds.max()) if active_speeds.size else 0.0
    if vmax <= 0.0:
        return ExtruderStart(usage=False, target_speed=0.0, start_acceleration=0.0)
    near = active_speeds >= (1.0 - PLATEAU_BAND) * vmax
    plateau = None
    limit = active_speeds.size - PLATEAU_SUSTAIN + 1
    for j in range(max(limit, 0)):
        if near[j : j + PLATEAU_SUSTAIN].all():
            plateau = j
            break
    if plateau is None:
        # extrusion too short to sustain a plateau: first near-max sample
        plateau = int(np.argmax(near))
    target = float(active_speeds[plateau])
    # the ramp occupies plateau+1 ticks: speed was zero one tick before start
    accel = target / float(plateau + 1)
    return ExtruderStart(usage=True, target_speed=target, start_acceleration=accel)


def extract_search_point(
    segment: ExtrusionSegment,
    frame: UniformFrame,
    roles: SignalRoles,
) -> SearchPoint:
    """Stoppage-window statistics plus startup speed targets/accelerations."""
    s0, s1 = segment.stoppage_range
    a0, a1 = segment.active_range
    if s1 - s0 < 2:
        raise InsufficientDataError(
            f"stoppage window [{s0}, {s1}) shorter than 2 ticks"
        )
    properties = {}
    for name in tuple(roles.pressures) + tuple(roles.temperatures):
        properties[name] = _window_stats(frame.columns[name][s0:s1])
    extruders = tuple(
        _extruder_start(frame.columns[name][a0:a1]) for name in roles.speeds
    )
    material = frame.columns[roles.material][s0:s1]
    die = frame.columns[roles.die][s0:s1]
    return SearchPoint(
        properties=properties,
        extruders=extruders,
        material_first=str(material[0]),
        material_last=str(material[-1]),
        material_changed=str(material[0]) != str(material[-1]),
        die_first=str(die[0]),
        die_last=str(die[-1]),
        die_changed=str(die[0]) != str(die[-1]),
        product_type=segment.product_type,
    )


def compute_steadiness_time(
    series: np.ndarray,
    setpoint: float,
    tolerance: float = STEADINESS_TOLERANCE,
    window: int = STEADINESS_WINDOW,
) -> int | None:
    """Seconds (at 1 Hz) until the profile is steady, or None if it never is.

    Procedure: (1) tolerance band = setpoint * (1 +/- tolerance); (2) RMSE of
    every sliding window against the setpoint; (3) threshold = the largest
    RMSE among windows whose samples all lie inside the band; (4) the time
    of the first window with RMSE below the threshold. The comparison in
    step 4 is strict except for a perfect series (threshold 0), which would
    otherwise never qualify. The returned time is the offset of the
    window's last sample; None when step 3 finds no window.
    """
    series = np.asarray(series, dtype=float)
    if setpoint <= 0:
        raise ValueError("setpoint must be positive")
    if series.size < window:
        raise InsufficientDataError(
            f"need at least {window} samples, got {series.size}"
        )
    err = series - setpoint
    sq = np.concatenate(([0.0], np.cumsum(err * err)))
    rmse = np.sqrt((sq[window:] - sq[:-window]) / window)
    inside = np.abs(err) <= tolerance * setpoint
    hits = np.concatenate(([0], np.cumsum(inside.astype(np.int64))))
    fully_inside = (hits[window:] - hits[:-window]) == window
    if not fully_inside.any():
        return None
    threshold = float(rmse[fully_inside].max())
    qualified = rmse <= threshold if threshold == 0.0 else rmse < threshold
    if not qualified.any():
        return None
    return int(np.argmax(qualified)) + window - 1


def _in_window_samples(signal: RawSignal, t_start: int, t_end: int):
    ticks = np.floor(signal.timestamps).astype(np.int64)
    mask = (ticks >= t_start) & (ticks < t_end)
    return ticks[mask], signal.values[mask]


def classify_extrusion(
    segment: ExtrusionSegment,
    frame: UniformFrame,
    profilometer: RawSignal,
    cut: RawSignal,
    setpoint: float,
) -> tuple[int, float | None]:
    """Feasibility class plus, for class 1, the steadiness time in seconds.

    Classification looks at raw (pre-imputation) samples restricted to the
    active window, because carried-forward values from an earlier extrusion
    must not masquerade as fresh quality readings. Class 3 when the cut
    indicator fired before any profilometer reading; class 2 when readings
    exist but never satisfy the steadiness procedure; class 1 otherwise.
    Steadiness is measured from the start of the active range.
    """
    a0, a1 = segment.active_range
    if a1 <= a0:
        raise ValueError("segment has an empty active range")
    t_start = int(frame.clock[a0])
    t_end = t_start + (a1 - a0)
    p_ticks, p_values = _in_window_samples(profilometer, t_start, t_end)
    c_ticks, c_values = _in_window_samples(cut, t_start, t_end)
    c_ticks = c_ticks[np.asarray(c_values, dtype=float) >= 0.5]

    if p_ticks.size == 0:
        return (3, None) if c_ticks.size else (2, None)
    if c_ticks.size and c_ticks.min() < p_ticks.min():
        return 3, None

    first = int(p_ticks.min())
    grid = np.arange(first, t_end, dtype=np.int64)
    idx = np.searchsorted(p_ticks, grid, side="right") - 1
    series = np.asarray(p_values, dtype=float)[idx]
    if series.size < STEADINESS_WINDOW:
        return 2, None
    offset = compute_steadiness_time(series, setpoint)
    if offset is None:
        return 2, None
    return 1, float(first - t_start + offset)


def _stat_value(stats: PropertyStats, stat: str) -> float:
    return {
        "min": stats.minimum,
        "max": stats.maximum,
        "mean": stats.mean,
        "std": stats.std,
        "first": stats.first,
        "last": stats.last,
    }[stat]


def search_point_row(point: SearchPoint) -> dict:
    """Flatten a search point into labeled-table columns."""
    row: dict = {"product": point.product_type}
    for name, stats in point.properties.items():
        for stat in PROPERTY_STATS:
            row[f"{name}_{stat}"] = _stat_value(stats, stat)
    for k, ext in enumerate(point.extruders, start=1):
        row[f"speed_target_{k}"] = ext.target_speed
        row[f"accel_start_{k}"] = ext.start_acceleration
        row[f"usage_{k}"] = int(ext.usage)
    row.update(
        material_first=point.material_first,
        material_last=point.material_last,
        material_changed=int(point.material_changed),
        die_first=point.die_first,
        die_last=point.die_last,
        die_changed=int(point.die_changed),
    )
    return row


def label_extrusions(
    frame: UniformFrame,
    segments,
    raw_signals: dict[str, RawSignal],
    roles: SignalRoles,
) -> tuple[pd.DataFrame, dict]:
    """Build the labeled-extrusion table plus segmentation diagnostics.

    Segments whose stoppage window is too short to yield statistics are
    skipped and counted rather than aborting the whole ingest.
    """
    profilometer = raw_signals[roles.profilometer]
    cut = raw_signals[roles.cut]
    rows = []
    degenerate = 0
    for segment in segments:
        try:
            point = extract_search_point(segment, frame, roles)
        except InsufficientDataError:
            degenerate += 1
            continue
        setpoint = float(frame.columns[roles.setpoint][segment.active_range[0]])
        cls, steadiness = classify_extrusion(segment, frame, profilometer, cut, setpoint)
        row = search_point_row(point)
        row["steadiness_time"] = steadiness if steadiness is not None else np.nan
        row["feasibility_class"] = cls
        row["t_start"] = int(frame.clock[segment.stoppage_range[0]])
        row["stoppage_s"] = segment.stoppage_length
        row["active_s"] = segment.active_length
        rows.append(row)

    table = pd.DataFrame(rows)
    counts = (
        table["feasibility_class"].value_counts().to_dict() if len(table) else {}
    )
    diagnostics = {
        "n_ticks": int(len(frame)),
        "n_segments": len(segments),
        "n_labeled": len(rows),
        "degenerate_windows_skipped": degenerate,
        "class_counts": {int(k): int(v) for k, v in sorted(counts.items())},
        "product_counts": (
            {str(k): int(v) for k, v in table["product"].value_counts().sort_index().items()}
            if len(table)
            else {}
        ),
    }
    return table, diagnostics
