"""Seeded synthetic datasets shaped like the traffic study's three sources.

Accident severity follows a documented ordinal logit over five informative
columns. Each informative column contributes a fixed number of risk points;
the total risk ``s`` is cut into Low/Medium/High at points chosen so the
class marginals match the requested priors, and severity is sampled from
``softmax(SHARPNESS * [0, s - c1, 2s - c1 - c2])``. Risk points sit on a
0.5 grid and cuts fall midway between attainable totals, so at the default
sharpness the label is, for practical purposes, a deterministic function
of the informative columns. The remaining 37 columns are noise.
"""

from __future__ import annotations

import csv
import io
import itertools
import re
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .datamodel import AccidentRecord, ImageClass, ImageSample, Severity, TrafficSeries
from .exceptions import ConfigError

# -- traffic volumes ---------------------------------------------------------


@dataclass(frozen=True)
class TrafficGenSpec:
    n: int = 10080
    base: float = 100.0
    slope: float = 0.001
    daily_amplitude: float = 20.0
    weekly_amplitude: float = 6.0
    sigma: float = 2.0
    seed: int = 42
    start_time: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ConfigError("n must be at least 1")
        if min(self.daily_amplitude, self.weekly_amplitude, self.sigma) < 0:
            raise ConfigError("amplitudes and sigma must be non-negative")


def traffic_signal(spec: TrafficGenSpec) -> np.ndarray:
    """Noise-free generating formula (before clamping)."""
    t = np.arange(spec.n, dtype=float)
    return (spec.base + spec.slope * t
            + spec.daily_amplitude * np.sin(2 * np.pi * t / 24)
            + spec.weekly_amplitude * np.sin(2 * np.pi * t / 168))


def gen_traffic(spec: TrafficGenSpec | None = None, **overrides) -> TrafficSeries:
    spec = _spec(spec, TrafficGenSpec, overrides)
    rng = np.random.default_rng(spec.seed)
    noise = rng.normal(0.0, 1.0, spec.n) * spec.sigma
    values = np.maximum(traffic_signal(spec) + noise, 0.0)
    return TrafficSeries(values=values, start_time=spec.start_time)


# -- accident records --------------------------------------------------------

WEATHER = {"normal": 0.60, "rain": 0.15, "fog": 0.10, "snow": 0.08, "windy": 0.07}
ROAD_TYPE = {"urban": 0.35, "rural": 0.30, "highway": 0.20, "junction": 0.15}
SPEED_LIMITS = (30, 50, 70, 90, 110)
AGE_RANGE = (16, 90)

# risk points per informative value
WEATHER_RISK = {"normal": 0.0, "rain": 3.0, "fog": 3.0, "snow": 3.0, "windy": 3.0}
ROAD_RISK = {"urban": 0.0, "rural": 0.0, "highway": 2.0, "junction": 2.0}
AGE_BANDS = ((21, 2.5), (None, 0.0))  # age < 21: 2.5 points, else 0
NIGHT_HOURS = (0, 5)  # hour_of_day in [0, 5) adds NIGHT_RISK
NIGHT_RISK = 1.0
FAST_LIMIT = 90  # speed_limit >= 90 adds FAST_RISK
FAST_RISK = 0.5
# extra points when (weather != normal) XOR (road_type in {highway, junction})
CHECKERBOARD_RISK = 3.0
SHARPNESS = 80.0

NUISANCE_NUMERIC = (
    "latitude", "longitude", "vehicle_age", "engine_cc", "num_passengers", "road_width_m",
    "lane_count", "traffic_density", "visibility_m", "temperature_c", "humidity_pct",
    "wind_speed_kmh", "precipitation_mm", "distance_to_junction_m", "distance_to_hospital_km",
    "response_time_min", "driver_experience_yrs", "vehicle_length_m", "curvature_index",
    "gradient_pct", "pavement_friction", "lighting_lux", "day_of_year", "minute_of_hour",
    "sensor_id",
)
NUISANCE_CATEGORICAL = {
    "day_of_week": ("Mon", "Tue", "Wed", "Thu", "Fri", "Sat", "Sun"),
    "vehicle_type": ("car", "bus", "truck", "motorcycle", "van"),
    "driver_sex": ("female", "male"),
    "light_condition": ("daylight", "dusk", "darkness"),
    "road_surface": ("dry", "wet", "icy", "gravel"),
    "junction_type": ("none", "t_junction", "crossroad", "roundabout", "y_junction"),
    "area_type": ("residential", "commercial", "industrial"),
    "vehicle_colour": ("white", "black", "silver", "red", "blue", "green"),
    "educational_level": ("primary", "secondary", "diploma", "degree", "postgrad"),
    "service_year_band": ("lt1", "1to5", "5to10", "gt10"),
    "pedestrian_movement": ("none", "crossing", "walking_along"),
    "cause_code": ("c01", "c02", "c03", "c04", "c05", "c06"),
}
INFORMATIVE = ("weather", "road_type", "driver_age", "hour_of_day", "speed_limit")
N_COLUMNS = len(INFORMATIVE) + len(NUISANCE_NUMERIC) + len(NUISANCE_CATEGORICAL)
assert N_COLUMNS == 42


@dataclass(frozen=True)
class AccidentGenSpec:
    n: int = 14526
    priors: tuple = (0.29, 0.52, 0.19)
    seed: int = 42
    checkerboard: bool = False

    def __post_init__(self):
        if self.n < 0:
            raise ConfigError("n must be non-negative")
        priors = np.asarray(self.priors, dtype=float)
        if priors.shape != (3,) or np.any(priors < 0) or abs(priors.sum() - 1.0) > 1e-9:
            raise ConfigError("priors must be three non-negative numbers summing to 1")


def age_risk(age) -> np.ndarray:
    age = np.asarray(age, dtype=float)
    out = np.zeros(age.shape)
    for upper, points in reversed(AGE_BANDS):
        if upper is None:
            out[:] = points
        else:
            out = np.where(age < upper, points, out)
    return out


def risk_score(weather, road_type, driver_age, hour_of_day, speed_limit, checkerboard=False) -> np.ndarray:
    """Total risk points of the ground-truth severity model."""
    weather = np.asarray(weather)
    road_type = np.asarray(road_type)
    s = (np.vectorize(WEATHER_RISK.__getitem__, otypes=[float])(weather)
         + np.vectorize(ROAD_RISK.__getitem__, otypes=[float])(road_type)
         + age_risk(driver_age)
         + NIGHT_RISK * ((np.asarray(hour_of_day) >= NIGHT_HOURS[0]) & (np.asarray(hour_of_day) < NIGHT_HOURS[1]))
         + FAST_RISK * (np.asarray(speed_limit) >= FAST_LIMIT))
    if checkerboard:
        bad_weather = weather != "normal"
        major_road = np.isin(road_type, ("highway", "junction"))
        s = s + CHECKERBOARD_RISK * (bad_weather ^ major_road)
    return s


def risk_distribution(checkerboard=False) -> tuple[np.ndarray, np.ndarray]:
    """Exact distribution of the risk score: (sorted atoms, probabilities)."""
    ages = np.arange(AGE_RANGE[0], AGE_RANGE[1] + 1)
    age_points, age_counts = np.unique(age_risk(ages), return_counts=True)
    age_probs = age_counts / ages.size
    night = (NIGHT_HOURS[1] - NIGHT_HOURS[0]) / 24
    fast = np.mean(np.asarray(SPEED_LIMITS) >= FAST_LIMIT)
    mass: dict[float, float] = {}
    for (w, pw), (r, pr), (a, pa), (h, ph), (v, pv) in itertools.product(
            WEATHER.items(), ROAD_TYPE.items(), zip(age_points, age_probs),
            ((True, night), (False, 1 - night)), ((True, fast), (False, 1 - fast))):
        s = WEATHER_RISK[w] + ROAD_RISK[r] + a + NIGHT_RISK * h + FAST_RISK * v
        if checkerboard and ((w != "normal") ^ (r in ("highway", "junction"))):
            s += CHECKERBOARD_RISK
        mass[s] = mass.get(s, 0.0) + pw * pr * pa * ph * pv
    atoms = np.array(sorted(mass))
    return atoms, np.array([mass[a] for a in atoms])


def severity_cuts(priors=(0.29, 0.52, 0.19), checkerboard=False) -> tuple[float, float]:
    """Cut points between attainable risk totals that best match the priors."""
    atoms, probs = risk_distribution(checkerboard)
    cdf = np.cumsum(probs)[:-1]
    mids = (atoms[:-1] + atoms[1:]) / 2
    c1 = mids[np.argmin(np.abs(cdf - priors[0]))]
    c2 = mids[np.argmin(np.abs(cdf - priors[0] - priors[1]))]
    if c2 <= c1:
        c2 = mids[min(np.searchsorted(mids, c1) + 1, mids.size - 1)]
    return float(c1), float(c2)


def severity_logits(s, cuts) -> np.ndarray:
    c1, c2 = cuts
    s = np.asarray(s, dtype=float)
    return SHARPNESS * np.stack([np.zeros_like(s), s - c1, 2 * s - c1 - c2], axis=-1)


def _pick(rng, table: dict, n: int) -> np.ndarray:
    keys = list(table)
    idx = rng.choice(len(keys), size=n, p=np.asarray(list(table.values())))
    return np.asarray(keys, dtype=object)[idx]


def gen_accidents(spec: AccidentGenSpec | None = None, **overrides) -> list[AccidentRecord]:
    spec = _spec(spec, AccidentGenSpec, overrides)
    n = spec.n
    if n == 0:
        return []
    rng = np.random.default_rng(spec.seed)
    columns: dict[str, np.ndarray] = {
        "weather": _pick(rng, WEATHER, n),
        "road_type": _pick(rng, ROAD_TYPE, n),
        "driver_age": rng.integers(AGE_RANGE[0], AGE_RANGE[1] + 1, n),
        "hour_of_day": rng.integers(0, 24, n),
        "speed_limit": np.asarray(SPEED_LIMITS)[rng.integers(0, len(SPEED_LIMITS), n)],
    }
    for name in NUISANCE_NUMERIC:
        loc, scale = rng.uniform(-50, 50), rng.uniform(0.5, 20)
        columns[name] = np.round(rng.normal(loc, scale, n), 3)
    for name, tokens in NUISANCE_CATEGORICAL.items():
        columns[name] = np.asarray(tokens, dtype=object)[rng.integers(0, len(tokens), n)]

    s = risk_score(columns["weather"], columns["road_type"], columns["driver_age"],
                   columns["hour_of_day"], columns["speed_limit"], spec.checkerboard)
    logits = severity_logits(s, severity_cuts(spec.priors, spec.checkerboard))
    logits -= logits.max(axis=1, keepdims=True)
    probs = np.exp(logits)
    probs /= probs.sum(axis=1, keepdims=True)
    u = rng.random(n)
    labels = np.minimum((u[:, None] > np.cumsum(probs, axis=1)).sum(axis=1), 2)

    names = sorted(columns)
    records = []
    for i in range(n):
        feats = {}
        for name in names:
            v = columns[name][i]
            feats[name] = v.item() if isinstance(v, np.generic) else v
        records.append(AccidentRecord(feats, Severity(int(labels[i]))))
    return records


# -- images ------------------------------------------------------------------


@dataclass(frozen=True)
class ImageGenSpec:
    n: int = 8760
    size: int = 32
    noise: float = 0.25
    seed: int = 42
    class_counts: tuple | None = field(default=None)

    def __post_init__(self):
        if self.n < 0 or self.size < 8:
            raise ConfigError("need n >= 0 and size >= 8")
        if self.noise < 0:
            raise ConfigError("noise must be non-negative")


def _quantize(img: np.ndarray) -> np.ndarray:
    return np.round(np.clip(img, 0.0, 1.0) * 255.0) / 255.0


def class_templates(size: int = 32) -> np.ndarray:
    """Noise-free motif for each image class, shape (4, size, size)."""
    yy, xx = np.mgrid[0:size, 0:size].astype(float)
    out = np.zeros((4, size, size))

    # clear: dim road with a few faint specks
    specks = np.random.default_rng(20240101).random((size, size)) < 0.05
    out[ImageClass.CLEAR] = 0.12 + 0.18 * specks

    # congested: dense grid of bright vehicle blobs
    step = size / 4
    blobs = np.zeros((size, size))
    for cy in np.arange(step / 2, size, step):
        for cx in np.arange(step / 2, size, step):
            blobs += np.exp(-((yy - cy) ** 2 + (xx - cx) ** 2) / (2 * (size / 16) ** 2))
    out[ImageClass.CONGESTED] = 0.15 + 0.8 * np.minimum(blobs, 1.0)

    # construction: diagonal warning stripes
    period = max(size // 4, 4)
    out[ImageClass.CONSTRUCTION] = np.where(((xx + yy) % period) < period / 2, 0.85, 0.15)

    # accident: bright cross with a cluster at the crossing
    half = size / 2
    width = max(size // 16, 1)
    cross = (np.abs(yy - half) < width) | (np.abs(xx - half) < width)
    cluster = np.exp(-((yy - half) ** 2 + (xx - half) ** 2) / (2 * (size / 10) ** 2))
    out[ImageClass.ACCIDENT] = np.minimum(0.1 + 0.8 * cross + 0.9 * cluster, 1.0)
    return _quantize(out)


def gen_images(spec: ImageGenSpec | None = None, **overrides) -> list[ImageSample]:
    """Class templates plus seeded Gaussian pixel noise, quantized to 8 bits."""
    spec = _spec(spec, ImageGenSpec, overrides)
    if spec.class_counts is not None:
        counts = [int(c) for c in spec.class_counts]
        if len(counts) != 4:
            raise ConfigError("class_counts needs four entries")
    else:
        counts = [spec.n // 4 + (1 if k < spec.n % 4 else 0) for k in range(4)]
    templates = class_templates(spec.size)
    rng = np.random.default_rng(spec.seed)
    labels = np.repeat(np.arange(4), counts)
    labels = labels[rng.permutation(labels.size)]
    samples = []
    for label in labels:
        img = templates[label] + rng.normal(0.0, 1.0, templates[label].shape) * spec.noise
        samples.append(ImageSample(_quantize(img)[:, :, None], ImageClass(int(label))))
    return samples


def images_to_arrays(samples) -> tuple[np.ndarray, np.ndarray]:
    """Stack samples into an (N, H, W, C) array and a label vector."""
    X = np.stack([s.pixels for s in samples]) if samples else np.zeros((0, 32, 32, 1))
    y = np.fromiter((int(s.label) for s in samples), dtype=np.int64, count=len(samples))
    return X, y


# -- accident narratives -----------------------------------------------------

NARRATIVE_TERMS = {
    "speed": 9, "driving": 7, "turnover": 6, "influence": 5, "drug": 5, "left": 5,
    "lane": 3, "vehicle": 3, "collision": 3, "overtaking": 2, "night": 2, "pedestrian": 2,
    "brake": 2, "junction": 2, "wet": 1, "road": 1, "truck": 1, "signal": 1, "distance": 1,
    "fatigue": 1, "mobile": 1, "phone": 1, "helmet": 1, "alcohol": 1,
}
FILLER = ("the", "a", "of", "and", "to", "was", "on", "at", "in", "while", "due", "with")


def gen_narratives(n: int = 500, seed: int = 42, words: int = 12) -> list[str]:
    """Short free-text accident descriptions with term rates set by ``NARRATIVE_TERMS``."""
    rng = np.random.default_rng(seed)
    terms = list(NARRATIVE_TERMS)
    weights = np.asarray(list(NARRATIVE_TERMS.values()), dtype=float)
    weights /= weights.sum()
    texts = []
    for _ in range(n):
        tokens = []
        for _ in range(words):
            if rng.random() < 0.6:
                tokens.append(terms[rng.choice(len(terms), p=weights)])
            else:
                tokens.append(FILLER[rng.integers(len(FILLER))])
        texts.append(" ".join(tokens).capitalize() + ".")
    return texts


def _spec(spec, cls, overrides):
    if spec is None:
        return cls(**overrides)
    if overrides:
        from dataclasses import replace
        return replace(spec, **overrides)
    return spec


# -- term frequency ----------------------------------------------------------

DEFAULT_STOPWORDS = frozenset(
    "a an and are as at be but by for from had has have in into is it its of on or that the "
    "their then there these this to was were while with due".split()
)


def load_stopwords(path) -> frozenset:
    """Newline-delimited stopword file; blank lines and ``#`` comments are skipped."""
    with open(path, encoding="utf-8") as fh:
        return frozenset(line.strip().lower() for line in fh
                         if line.strip() and not line.lstrip().startswith("#"))


def word_freq(texts, stopwords=DEFAULT_STOPWORDS, min_length: int = 3) -> list[tuple[str, int]]:
    """Term counts, highest first, ties in lexicographic order.

    Text is lowercased and split on runs of non-alphanumeric characters;
    stopwords and tokens shorter than ``min_length`` are dropped.
    """
    stop = {w.lower() for w in stopwords} if stopwords else set()
    counts = Counter()
    for text in texts:
        counts.update(tok for tok in _TOKEN.split(text.lower())
                      if len(tok) >= min_length and tok not in stop)
    return sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))


def word_freq_csv(freqs) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["term", "count"])
    writer.writerows(freqs)
    return buf.getvalue()


_TOKEN = re.compile(r"[^0-9a-z]+")
