"""Synthetic extrusion plant with a known, grid-certifiable optimum.

Generates multi-rate raw signals that exercise the whole curation path,
driven by a hidden smooth steadiness-time function over the decision box
plus deterministic feasibility rules calibrated to a target class mix.
Profilometer traces are constructed so that the sliding-RMSE labeling
procedure recovers the injected steadiness time exactly; class-3
extrusions emit no profilometer samples at all, and class-2 traces never
enter the tolerance band.

The ground-truth record is written next to (never inside) the signal
directory so the optimizer can only ever see the sensor data.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .labeling import STEADINESS_TOLERANCE, STEADINESS_WINDOW
from .signals import RawSignal, SignalManifest, SignalSpec, save_signals

PRODUCTS = ("A", "B", "C")
USAGE = {"A": (1, 2, 3), "B": (1, 2, 3, 4), "C": (1, 2, 3, 4, 5)}
SETPOINTS = {"A": 12.0, "B": 9.0, "C": 15.0}
MATERIALS = ("M1", "M2", "M3")
DIES = ("D1", "D2", "D3")
N_EXTRUDERS = 5

TEMPERATURES = {"temp_feed": (40.0, 90.0), "temp_screw": (60.0, 140.0), "temp_barrel": (80.0, 160.0)}
PRESSURES = {"pressure_feed": (20.0, 80.0), "pressure_screw": (50.0, 200.0)}
SPEED_BOX = (4.0, 12.0)
ACCEL_BOX = (2.0, 6.0)

# effective decision variables: everything else is noise to the hidden function
EFFECTIVE = (
    ("temp_screw_mean", 60.0, 140.0),
    ("temp_barrel_mean", 80.0, 160.0),
    ("pressure_screw_mean", 50.0, 200.0),
    ("speed_target_1", 4.0, 12.0),
    ("accel_start_1", 2.0, 6.0),
)

# The deepest well sits on the startup lattice (its acceleration equals
# speed/2), so historical extrusions can actually realize near-optimal
# values despite the whole-tick ramp quantization of feature extraction.
# Minima stay above the 5 s labeling floor of the sliding-window procedure.
_BASE = {"A": 26.0, "B": 29.0, "C": 33.0}
_WELLS = (
    (19.0, (0.62, 0.30, 0.45, 0.40, 0.40), (0.16, 0.18, 0.22, 0.20, 0.25)),
    (11.0, (0.25, 0.70, 0.60, 0.70, 0.35), (0.20, 0.16, 0.25, 0.22, 0.20)),
    (7.0, (0.80, 0.75, 0.25, 0.55, 0.50), (0.22, 0.20, 0.18, 0.25, 0.30)),
)
_WELL1_SHIFT = {
    "A": (0.0, 0.0, 0.0, 0.0, 0.0),
    "B": (0.06, -0.04, 0.05, 0.0, 0.0),
    "C": (-0.05, 0.06, 0.03, 0.0, 0.0),
}
_INTERACTION_GAIN = 6.0

_Q_CUT = np.array([0.0, 0.85, 0.55, 0.35, 0.0])
_Q_UNSTEADY = np.array([-0.80, 0.0, 0.0, 0.60, -0.40])

# condition sampling clusters in normalized effective coordinates
_CLUSTER_BROAD = (0.55, np.array([0.45, 0.45, 0.50, 0.55, 0.45]), 0.20)
_CLUSTER_PRESET = (0.45, np.array([0.64, 0.34, 0.48, 0.44, 0.43]), 0.12)

CALIBRATION_DRAWS = 4000


@dataclass(frozen=True)
class PlantSpec:
    """Knobs of the synthetic plant; everything is seeded."""

    n_extrusions: int = 2000
    product_mix: tuple = (0.697, 0.196, 0.107)
    class_mix: tuple = (0.3306, 0.0738, 0.5955)
    noise_sigma: float = 0.1
    delta: float = 0.5
    seed: int = 0


def _z_of(values: np.ndarray) -> np.ndarray:
    """Normalize effective-variable columns into the unit box."""
    values = np.atleast_2d(np.asarray(values, dtype=float))
    lo = np.array([e[1] for e in EFFECTIVE])
    hi = np.array([e[2] for e in EFFECTIVE])
    return (values - lo) / (hi - lo)


def _native_of(z: np.ndarray) -> np.ndarray:
    z = np.atleast_2d(np.asarray(z, dtype=float))
    lo = np.array([e[1] for e in EFFECTIVE])
    hi = np.array([e[2] for e in EFFECTIVE])
    return lo + z * (hi - lo)


def steadiness_surface(z: np.ndarray, product: str) -> np.ndarray:
    """Hidden steadiness-time function (seconds) over normalized coordinates.

    Wells use a quartic radial profile, which keeps the surface smooth but
    gives each basin a broad flat bottom that historical sampling can
    actually populate.
    """
    z = np.atleast_2d(np.asarray(z, dtype=float))
    shift = np.asarray(_WELL1_SHIFT[product])
    y = np.full(z.shape[0], _BASE[product])
    y += _INTERACTION_GAIN * (z[:, 1] - 0.35) * (z[:, 0] - 0.65)
    for i, (amp, mu, sigma) in enumerate(_WELLS):
        center = np.asarray(mu) + (shift if i == 0 else 0.0)
        quad = (((z - center) / np.asarray(sigma)) ** 2).sum(axis=1)
        y -= amp * np.exp(-0.5 * quad * quad)
    return y


@dataclass
class GroundTruth:
    """Calibrated feasibility thresholds plus the class/objective rules."""

    spec: PlantSpec
    theta_cut: float
    theta_unsteady: float

    @classmethod
    def from_spec(cls, spec: PlantSpec) -> "GroundTruth":
        """Quantile-calibrate the class thresholds against the sampling mix."""
        rng = np.random.default_rng(spec.seed + 99991)
        products = rng.choice(len(PRODUCTS), size=CALIBRATION_DRAWS, p=np.asarray(spec.product_mix))
        z = _sample_effective_z(rng, CALIBRATION_DRAWS)
        # quantized startup acceleration, exactly as feature extraction sees it
        speed = _native_of(z)[:, 3]
        accel_drawn = _native_of(z)[:, 4]
        ramp = np.ceil(speed / accel_drawn)
        z[:, 4] = (speed / ramp - ACCEL_BOX[0]) / (ACCEL_BOX[1] - ACCEL_BOX[0])

        q_cut = z @ _Q_CUT
        mix1, mix2, mix3 = spec.class_mix
        theta_cut = float(np.quantile(q_cut, 1.0 - mix3))
        non_cut = q_cut <= theta_cut

        y = np.empty(CALIBRATION_DRAWS)
        for p_idx, p in enumerate(PRODUCTS):
            mask = products == p_idx
            y[mask] = steadiness_surface(z[mask], p)
        t_set = _calibration_t_setpoint(rng, z, products)
        inconsistent = t_set >= (1.0 + spec.delta) * y

        share2 = mix2 / max(mix1 + mix2, 1e-12)
        pool = non_cut & ~inconsistent
        p_inc = float(inconsistent[non_cut].mean()) if non_cut.any() else 0.0
        residual = max((share2 - p_inc) / max(1.0 - p_inc, 1e-12), 0.0)
        q_unsteady = z @ _Q_UNSTEADY
        theta_unsteady = float(np.quantile(q_unsteady[pool], 1.0 - residual)) if residual > 0 else np.inf
        return cls(spec=spec, theta_cut=theta_cut, theta_unsteady=theta_unsteady)

    def classify(self, z: np.ndarray, t_set: np.ndarray, product: str) -> np.ndarray:
        """Deterministic class rule in {1,2,3} on normalized coordinates."""
        z = np.atleast_2d(np.asarray(z, dtype=float))
        t_set = np.asarray(t_set, dtype=float)
        y = steadiness_surface(z, product)
        out = np.ones(z.shape[0], dtype=np.int64)
        cut = z @ _Q_CUT > self.theta_cut
        unsteady = (z @ _Q_UNSTEADY > self.theta_unsteady) | (
            t_set >= (1.0 + self.spec.delta) * y
        )
        out[unsteady] = 2
        out[cut] = 3
        return out

    def to_dict(self) -> dict:
        return {
            "theta_cut": self.theta_cut,
            "theta_unsteady": self.theta_unsteady,
        }


def _sample_effective_z(rng: np.random.Generator, n: int) -> np.ndarray:
    """Mixture of a broad exploration cloud and a tighter preset cluster."""
    w1, c1, s1 = _CLUSTER_BROAD
    _, c2, s2 = _CLUSTER_PRESET
    pick = rng.random(n) < w1
    z = np.where(
        pick[:, None],
        c1 + s1 * rng.standard_normal((n, 5)),
        c2 + s2 * rng.standard_normal((n, 5)),
    )
    return np.clip(z, 0.02, 0.98)


def _calibration_t_setpoint(rng, z, products) -> np.ndarray:
    """Setpoint times of calibration draws, including the other extruders."""
    speed1 = _native_of(z)[:, 3]
    ramp1 = np.ceil(speed1 / _native_of(z)[:, 4])
    t_set = speed1 / (speed1 / ramp1)
    for p_idx, p in enumerate(PRODUCTS):
        mask = products == p_idx
        n = int(mask.sum())
        for _ in USAGE[p][1:]:
            sp = rng.uniform(*SPEED_BOX, size=n)
            ac = rng.uniform(*ACCEL_BOX, size=n)
            t_set[mask] = np.maximum(t_set[mask], np.ceil(sp / ac))
    return t_set


def _quantized_start(speed: float, accel_drawn: float) -> tuple[int, float]:
    """Ramp length in whole ticks and the acceleration the labeler will see."""
    ramp = int(np.ceil(speed / accel_drawn))
    return ramp, speed / ramp


def _locf_stats(ticks: np.ndarray, values: np.ndarray, t0: int, t1: int) -> dict:
    """Window statistics of the step function the 1 Hz imputation produces."""
    grid = np.arange(t0, t1, dtype=np.int64)
    idx = np.searchsorted(ticks, grid, side="right") - 1
    v = values[idx]
    return {
        "min": float(v.min()),
        "max": float(v.max()),
        "mean": float(v.mean()),
        "std": float(v.std()),
        "first": float(v[0]),
        "last": float(v[-1]),
    }


def steady_profile_trace(setpoint: float, steadiness: int, length: int) -> np.ndarray:
    """Profilometer trace whose labeled steadiness time equals ``steadiness``.

    Before the in-band section the oscillation amplitude grows backwards in
    time and stays well outside the tolerance band; from tick
    ``steadiness - 5`` on it decays strictly inside the band, which pins the
    RMSE threshold to the first fully in-band window and makes the next
    window the first to qualify.
    """
    band = STEADINESS_TOLERANCE * setpoint
    u = steadiness - STEADINESS_WINDOW
    if u < 0 or length < steadiness + 1:
        raise ValueError("trace too short for the requested steadiness time")
    j = np.arange(length)
    pre = np.minimum(2.2 * band * 1.06 ** (u - 1 - j), 8.0 * band)
    post = 0.8 * band * 0.9 ** (j - u)
    amp = np.where(j < u, pre, post)
    sign = np.where(j % 2 == 0, 1.0, -1.0)
    return setpoint + sign * amp


def unsteady_profile_trace(setpoint: float, length: int, rng) -> np.ndarray:
    """Trace that never spends a full window inside the tolerance band."""
    band = STEADINESS_TOLERANCE * setpoint
    j = np.arange(length)
    amp = band * (1.3 + 1.0 * 0.97 ** j) + band * 0.2 * rng.random(length)
    sign = np.where(j % 2 == 0, 1.0, -1.0)
    return setpoint + sign * amp


@dataclass
class _SignalBuffer:
    ticks: list = field(default_factory=list)
    values: list = field(default_factory=list)

    def emit(self, tick: int, value) -> None:
        self.ticks.append(tick)
        self.values.append(value)


def default_manifest() -> SignalManifest:
    signals = [
        SignalSpec(f"speed_{k}", "units/s", "continuous", "speed", k)
        for k in range(1, N_EXTRUDERS + 1)
    ]
    signals += [SignalSpec(n, "degC", "continuous", "temperature") for n in TEMPERATURES]
    signals += [SignalSpec(n, "bar", "continuous", "pressure") for n in PRESSURES]
    signals += [
        SignalSpec("material", "", "categorical", "material"),
        SignalSpec("die", "", "categorical", "die"),
        SignalSpec("product", "", "categorical", "product"),
        SignalSpec("profile", "mm", "continuous", "profilometer"),
        SignalSpec("profile_setpoint", "mm", "continuous", "setpoint"),
        SignalSpec("cut", "", "boolean", "cut"),
    ]
    return SignalManifest(signals=signals, commander_speed="speed_1")


def generate_history(spec: PlantSpec, data_dir, truth_path=None) -> dict:
    """Emit the raw-signal directory and return the ground-truth record.

    When ``truth_path`` is given the record is also written there as JSON;
    keep it outside ``data_dir`` so optimization never reads it.
    """
    rng = np.random.default_rng(spec.seed)
    truth = GroundTruth.from_spec(spec)
    manifest = default_manifest()
    buffers = {s.name: _SignalBuffer() for s in manifest.signals}

    extrusions = []
    if spec.n_extrusions > 0:
        # every signal gets a sample at t=0 so the whole span can be imputed;
        # used extruders close their own active runs with a 0 at extrusion end
        for k in range(1, N_EXTRUDERS + 1):
            buffers[f"speed_{k}"].emit(0, 0.0)
        buffers["profile"].emit(0, SETPOINTS["A"])
        buffers["cut"].emit(0, 0.0)
        buffers["material"].emit(0, MATERIALS[0])
        buffers["die"].emit(0, DIES[0])

        cursor = 0
        material = MATERIALS[0]
        die = DIES[0]
        for index in range(spec.n_extrusions):
            product = PRODUCTS[rng.choice(len(PRODUCTS), p=np.asarray(spec.product_mix))]
            record, cursor, material, die = _emit_extrusion(
                index, product, cursor, material, die, spec, truth, rng, buffers
            )
            extrusions.append(record)

    raw = [
        RawSignal(
            name=s.name,
            unit=s.unit,
            kind=s.kind,
            timestamps=np.asarray(buffers[s.name].ticks, dtype=float),
            values=np.asarray(
                buffers[s.name].values,
                dtype=object if s.kind == "categorical" else float,
            ),
        )
        for s in manifest.signals
    ]
    save_signals(raw, manifest, data_dir)

    record = {
        "spec": {
            "n_extrusions": spec.n_extrusions,
            "product_mix": list(spec.product_mix),
            "class_mix": list(spec.class_mix),
            "noise_sigma": spec.noise_sigma,
            "delta": spec.delta,
            "seed": spec.seed,
        },
        "thresholds": truth.to_dict(),
        "optima": {p: true_optimum(spec, p) for p in PRODUCTS},
        "extrusions": extrusions,
    }
    if truth_path is not None:
        truth_path = Path(truth_path)
        truth_path.parent.mkdir(parents=True, exist_ok=True)
        truth_path.write_text(json.dumps(record, indent=1))
    return record


def _emit_extrusion(index, product, cursor, material, die, spec, truth, rng, buffers):
    t0 = cursor
    stoppage = int(rng.integers(20, 61))
    a = t0 + stoppage

    # material / die occasionally change mid-stoppage
    if rng.random() < 0.30:
        material_new = MATERIALS[int(rng.integers(0, len(MATERIALS)))]
        buffers["material"].emit(t0 + stoppage // 2, material_new)
    else:
        material_new = material
    if rng.random() < 0.20:
        die_new = DIES[int(rng.integers(0, len(DIES)))]
        buffers["die"].emit(t0 + stoppage // 2, die_new)
    else:
        die_new = die
    buffers["product"].emit(t0, product)
    setpoint = SETPOINTS[product]
    buffers["profile_setpoint"].emit(t0, setpoint)

    # stoppage conditions: effective ones from the cluster mix, rest uniform
    z = _sample_effective_z(rng, 1)[0]
    levels = {
        "temp_screw": _native_of(z)[0, 0],
        "temp_barrel": _native_of(z)[0, 1],
        "pressure_screw": _native_of(z)[0, 2],
        "temp_feed": rng.uniform(*TEMPERATURES["temp_feed"]),
        "pressure_feed": rng.uniform(*PRESSURES["pressure_feed"]),
    }
    features = {}
    for name in TEMPERATURES:
        ticks = np.arange(t0, a, 5, dtype=np.int64)
        wig = rng.uniform(0.5, 2.0)
        vals = levels[name] + wig * np.cos(0.7 * np.arange(ticks.size) + rng.uniform(0, 6.28))
        vals += rng.normal(0.0, 0.15, size=ticks.size)
        for t, v in zip(ticks, vals):
            buffers[name].emit(int(t), float(v))
        for stat, v in _locf_stats(ticks, vals, t0, a).items():
            features[f"{name}_{stat}"] = v
    for name in PRESSURES:
        ticks = [t0]
        while ticks[-1] + 2 < a - 1:
            step = int(rng.integers(2, 11))
            if ticks[-1] + step >= a:
                break
            ticks.append(ticks[-1] + step)
        ticks = np.asarray(ticks, dtype=np.int64)
        wig = rng.uniform(1.0, 4.0)
        vals = levels[name] + wig * np.cos(0.9 * np.arange(ticks.size) + rng.uniform(0, 6.28))
        vals += rng.normal(0.0, 0.4, size=ticks.size)
        for t, v in zip(ticks, vals):
            buffers[name].emit(int(t), float(v))
        for stat, v in _locf_stats(ticks, vals, t0, a).items():
            features[f"{name}_{stat}"] = v

    # startup targets: extruder 1 comes from the effective coordinates
    used = USAGE[product]
    speeds = {}
    ramps = {}
    sp1, ac1_drawn = _native_of(z)[0, 3], _native_of(z)[0, 4]
    for k in range(1, N_EXTRUDERS + 1):
        if k not in used:
            features[f"speed_target_{k}"] = 0.0
            features[f"accel_start_{k}"] = 0.0
            features[f"usage_{k}"] = 0
            continue
        speed = sp1 if k == 1 else float(rng.uniform(*SPEED_BOX))
        accel_drawn = ac1_drawn if k == 1 else float(rng.uniform(*ACCEL_BOX))
        ramp, accel_real = _quantized_start(speed, accel_drawn)
        speeds[k] = speed
        ramps[k] = ramp
        features[f"speed_target_{k}"] = speed
        features[f"accel_start_{k}"] = accel_real
        features[f"usage_{k}"] = 1

    features.update(
        material_first=material,
        material_last=material_new,
        material_changed=int(material_new != material),
        die_first=die,
        die_last=die_new,
        die_changed=int(die_new != die),
        product=product,
    )

    # class and objective from the realized (post-quantization) features
    z_real = _z_of(
        np.array(
            [[features[name] for name, _, _ in EFFECTIVE]]
        )
    )
    t_set = max(ramps.values())
    label = int(truth.classify(z_real, np.array([t_set]), product)[0])
    y_star = float(steadiness_surface(z_real, product)[0])
    y_noisy = y_star * float(np.exp(spec.noise_sigma * rng.standard_normal()))
    steadiness = max(STEADINESS_WINDOW, int(round(y_noisy)))

    if label == 1:
        active = steadiness + int(rng.integers(8, 16))
    elif label == 2:
        active = int(rng.integers(25, 46))
    else:
        active = int(rng.integers(10, 21))

    max_ramp = max(ramps.values())
    active = max(active, max_ramp + 4)
    e = a + active

    for k in used:
        ramp = ramps[k]
        accel_real = features[f"accel_start_{k}"]
        for j in range(ramp):
            buffers[f"speed_{k}"].emit(a + j, (j + 1) * accel_real)
        buffers[f"speed_{k}"].emit(e, 0.0)

    if label == 1:
        trace = steady_profile_trace(setpoint, steadiness, active)
        for j, v in enumerate(trace):
            buffers["profile"].emit(a + j, float(v))
    elif label == 2:
        trace = unsteady_profile_trace(setpoint, active, rng)
        for j, v in enumerate(trace):
            buffers["profile"].emit(a + j, float(v))
    else:
        fire = a + min(2, active - 1)
        buffers["cut"].emit(fire, 1.0)
        buffers["cut"].emit(fire + 1, 0.0)

    record = {
        "index": index,
        "product": product,
        "t_stop": t0,
        "t_active": a,
        "t_end": e,
        "class": label,
        "y_star": y_star,
        "y_noisy": y_noisy,
        "steadiness_emitted": steadiness if label == 1 else None,
        "t_setpoint": float(t_set),
        "features": features,
    }
    return record, e, material_new, die_new


FROZEN_OTHER_SPEED = 6.0
FROZEN_OTHER_ACCEL = 4.0


def true_optimum(spec: PlantSpec, product: str, n_grid: int = 17) -> dict:
    """Dense-grid minimizer of the hidden function over the feasible region.

    The grid spans the five effective coordinates; the other extruders'
    startup settings are frozen at a comfortably consistent ratio, which
    cannot hide a better optimum because they do not enter the hidden
    function. Resolution is reported alongside the result.
    """
    truth = GroundTruth.from_spec(spec)
    axes = [np.linspace(0.0, 1.0, n_grid)] * len(EFFECTIVE)
    mesh = np.meshgrid(*axes, indexing="ij")
    z = np.stack([m.ravel() for m in mesh], axis=1)

    frozen_ratio = np.ceil(FROZEN_OTHER_SPEED / FROZEN_OTHER_ACCEL)
    best_y = np.inf
    best_z = None
    chunk = 200_000
    for start in range(0, z.shape[0], chunk):
        zc = z[start : start + chunk]
        native = _native_of(zc)
        # the labeler quantizes ramps to whole ticks, so t_setpoint is a ramp count
        ramp = np.ceil(native[:, 3] / native[:, 4])
        t_set = np.maximum(ramp, frozen_ratio)
        labels = truth.classify(zc, t_set, product)
        y = steadiness_surface(zc, product)
        feasible = labels == 1
        if feasible.any():
            i = int(np.argmin(np.where(feasible, y, np.inf)))
            if y[i] < best_y:
                best_y = float(y[i])
                best_z = zc[i].copy()

    native = _native_of(best_z)[0]
    point = {name: float(v) for (name, _, _), v in zip(EFFECTIVE, native)}
    return {
        "product": product,
        "y_star": best_y,
        "z_star": best_z.tolist(),
        "x_star": point,
        "n_grid": n_grid,
        "grid_step": 1.0 / (n_grid - 1),
    }
