"""Raw sensor streams: curation to a uniform 1 Hz clock and segmentation.

Signals arrive at mixed acquisition rates (fixed-frequency, event-driven,
or change-triggered categoricals). Everything is aligned to a shared 1 Hz
clock with last-observation-carried-forward imputation before any feature
is computed.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from .errors import CurationError

logger = logging.getLogger(__name__)

KINDS = ("continuous", "categorical", "boolean")


@dataclass
class RawSignal:
    """One sensor stream: strictly increasing timestamps and their values.

    Sub-second timestamps are floored to their containing 1 s tick during
    resampling; when several samples share a tick the last one wins.
    """

    name: str
    unit: str
    kind: str
    timestamps: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        if self.kind not in KINDS:
            raise CurationError(f"signal {self.name!r}: unknown kind {self.kind!r}")
        self.timestamps = np.asarray(self.timestamps, dtype=float)
        if np.any(np.diff(self.timestamps) <= 0):
            raise CurationError(f"signal {self.name!r}: timestamps must strictly increase")
        if self.kind == "continuous":
            self.values = np.asarray(self.values, dtype=float)
            if self.values.size and not np.all(np.isfinite(self.values)):
                raise CurationError(f"signal {self.name!r}: non-finite continuous value")
        elif self.kind == "boolean":
            self.values = np.asarray(self.values, dtype=float)
        else:
            self.values = np.asarray(self.values, dtype=object)


@dataclass
class UniformFrame:
    """Multi-signal table aligned to a fixed 1 Hz clock."""

    clock: np.ndarray
    columns: dict[str, np.ndarray]
    kinds: dict[str, str]

    def __len__(self) -> int:
        return self.clock.size

    def column(self, name: str) -> np.ndarray:
        return self.columns[name]


@dataclass(frozen=True)
class ExtrusionSegment:
    """One extrusion: the preceding stoppage window plus the active window.

    Ranges are half-open index intervals into the frame; the stoppage ends
    exactly where the active range begins.
    """

    stoppage_range: tuple[int, int]
    active_range: tuple[int, int]
    product_type: str = ""
    die_id: str = ""

    @property
    def stoppage_length(self) -> int:
        return self.stoppage_range[1] - self.stoppage_range[0]

    @property
    def active_length(self) -> int:
        return self.active_range[1] - self.active_range[0]


def resample_locf(signals, span) -> UniformFrame:
    """Align every signal to 1 s ticks covering [span[0], span[1]] inclusive.

    The value at tick t is the signal's most recent raw sample at or before
    t. A signal with no sample at or before the first tick cannot be imputed
    and raises a curation error naming it.
    """
    t0, t1 = span
    clock = np.arange(int(np.floor(t0)), int(np.floor(t1)) + 1, dtype=np.int64)
    columns: dict[str, np.ndarray] = {}
    kinds: dict[str, str] = {}
    for sig in signals:
        if sig.timestamps.size == 0:
            raise CurationError(f"signal {sig.name!r} has no samples")
        ticks = np.floor(sig.timestamps).astype(np.int64)
        idx = np.searchsorted(ticks, clock, side="right") - 1
        if idx[0] < 0:
            raise CurationError(
                f"signal {sig.name!r} has no sample at or before t={clock[0]}"
            )
        columns[sig.name] = sig.values[idx]
        kinds[sig.name] = sig.kind
    return UniformFrame(clock=clock, columns=columns, kinds=kinds)


def _active_runs(mask: np.ndarray) -> list[tuple[int, int]]:
    padded = np.concatenate(([False], mask, [False]))
    edges = np.flatnonzero(np.diff(padded.astype(np.int8)))
    return list(zip(edges[::2], edges[1::2]))


def segment_extrusions(
    frame: UniformFrame,
    commander_speed_column: str,
    product_column: str | None = None,
    die_column: str | None = None,
) -> list[ExtrusionSegment]:
    """Split the frame into extrusions using the commander extruder's speed.

    An extrusion starts when the commander speed leaves zero and ends when
    it returns to zero; each one owns the zero-speed gap that precedes it.
    A frame that begins mid-extrusion has its first active interval
    discarded with a warning.
    """
    if commander_speed_column not in frame.columns:
        raise CurationError(f"no column {commander_speed_column!r} in frame")
    if frame.kinds[commander_speed_column] != "continuous":
        raise CurationError(f"column {commander_speed_column!r} must be continuous")
    speed = frame.columns[commander_speed_column]
    runs = _active_runs(speed > 0)
    prev_end = 0
    if runs and runs[0][0] == 0:
        logger.warning(
            "frame begins mid-extrusion; discarding first active interval [0, %d)",
            runs[0][1],
        )
        prev_end = runs[0][1]
        runs = runs[1:]
    segments = []
    for start, end in runs:
        product = str(frame.columns[product_column][start]) if product_column else ""
        die = str(frame.columns[die_column][start]) if die_column else ""
        segments.append(
            ExtrusionSegment(
                stoppage_range=(prev_end, start),
                active_range=(start, end),
                product_type=product,
                die_id=die,
            )
        )
        prev_end = end
    return segments


@dataclass(frozen=True)
class SignalSpec:
    name: str
    unit: str
    kind: str
    role: str = ""
    extruder: int | None = None


@dataclass
class SignalRoles:
    """Which signal plays which part in feature extraction."""

    commander: str
    speeds: tuple[str, ...]
    pressures: tuple[str, ...]
    temperatures: tuple[str, ...]
    material: str
    die: str
    product: str
    profilometer: str
    setpoint: str
    cut: str


@dataclass
class SignalManifest:
    signals: list[SignalSpec] = field(default_factory=list)
    commander_speed: str = ""

    def roles(self) -> SignalRoles:
        by_role: dict[str, list[SignalSpec]] = {}
        for s in self.signals:
            by_role.setdefault(s.role, []).append(s)

        def single(role: str) -> str:
            specs = by_role.get(role, [])
            if len(specs) != 1:
                raise CurationError(f"manifest must declare exactly one {role!r} signal")
            return specs[0].name

        speeds = sorted(by_role.get("speed", []), key=lambda s: s.extruder or 0)
        if not speeds:
            raise CurationError("manifest declares no extruder speed signals")
        commander = self.commander_speed or speeds[0].name
        return SignalRoles(
            commander=commander,
            speeds=tuple(s.name for s in speeds),
            pressures=tuple(s.name for s in by_role.get("pressure", [])),
            temperatures=tuple(s.name for s in by_role.get("temperature", [])),
            material=single("material"),
            die=single("die"),
            product=single("product"),
            profilometer=single("profilometer"),
            setpoint=single("setpoint"),
            cut=single("cut"),
        )

    def to_dict(self) -> dict:
        return {
            "commander_speed": self.commander_speed,
            "signals": [
                {
                    "name": s.name,
                    "unit": s.unit,
                    "kind": s.kind,
                    "role": s.role,
                    **({"extruder": s.extruder} if s.extruder is not None else {}),
                }
                for s in self.signals
            ],
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "SignalManifest":
        return cls(
            signals=[
                SignalSpec(
                    name=s["name"],
                    unit=s.get("unit", ""),
                    kind=s["kind"],
                    role=s.get("role", ""),
                    extruder=s.get("extruder"),
                )
                for s in payload["signals"]
            ],
            commander_speed=payload.get("commander_speed", ""),
        )

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2))

    @classmethod
    def load(cls, path) -> "SignalManifest":
        try:
            return cls.from_dict(json.loads(Path(path).read_text()))
        except (OSError, json.JSONDecodeError, KeyError) as exc:
            raise CurationError(f"cannot read signal manifest {path}: {exc}") from exc


def load_signals(data_dir) -> tuple[list[RawSignal], SignalManifest]:
    """Read a directory of per-signal CSV files plus its manifest."""
    data_dir = Path(data_dir)
    manifest = SignalManifest.load(data_dir / "manifest.json")
    signals = []
    for spec in manifest.signals:
        path = data_dir / "signals" / f"{spec.name}.csv"
        if not path.exists():
            raise CurationError(f"missing signal file {path}")
        df = pd.read_csv(path)
        if list(df.columns) != ["timestamp", "value"]:
            raise CurationError(f"{path} must have a 'timestamp,value' header")
        values = df["value"].to_numpy()
        if spec.kind == "categorical":
            values = values.astype(str).astype(object)
        signals.append(
            RawSignal(
                name=spec.name,
                unit=spec.unit,
                kind=spec.kind,
                timestamps=df["timestamp"].to_numpy(dtype=float),
                values=values,
            )
        )
    return signals, manifest


def save_signals(signals, manifest: SignalManifest, data_dir) -> None:
    data_dir = Path(data_dir)
    (data_dir / "signals").mkdir(parents=True, exist_ok=True)
    manifest.save(data_dir / "manifest.json")
    for sig in signals:
        pd.DataFrame({"timestamp": sig.timestamps, "value": sig.values}).to_csv(
            data_dir / "signals" / f"{sig.name}.csv", index=False
        )
