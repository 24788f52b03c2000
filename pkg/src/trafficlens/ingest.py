"""Readers and writers for the on-disk dataset layouts.

* traffic: CSV with header ``timestamp_hour,volume``, consecutive integer hours
* accidents: CSV, one column per feature, ``severity`` (Low/Medium/High) last
* images: one subdirectory per class label holding binary PGM (P5) or PPM (P6) files

Every rejection carries the offending line number or file path.
"""

from __future__ import annotations

import csv
import math
import os
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .datamodel import IMAGE_LABELS, AccidentRecord, ImageClass, ImageSample, Severity, TrafficSeries
from .exceptions import DataError, GapError, ParseError, SchemaError

TRAFFIC_HEADER = ("timestamp_hour", "volume")
SEVERITY_COLUMN = "severity"
IMAGE_SUFFIXES = (".pgm", ".ppm")


# -- traffic -----------------------------------------------------------------

def write_traffic_csv(series: TrafficSeries, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRAFFIC_HEADER)
        for t, v in zip(series.timestamps, series.values):
            writer.writerow([int(t), repr(float(v))])


def load_traffic_csv(path) -> TrafficSeries:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(c.strip() for c in rows[0]) != TRAFFIC_HEADER:
        raise SchemaError(f"expected header {','.join(TRAFFIC_HEADER)}", f"{path}:1")
    stamps, values = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        where = f"{path}:{lineno}"
        if len(row) != 2:
            raise ParseError(f"expected 2 fields, got {len(row)}", where)
        try:
            stamp = int(row[0])
        except ValueError:
            raise ParseError(f"timestamp {row[0]!r} is not an integer", where) from None
        try:
            volume = float(row[1])
        except ValueError:
            raise ParseError(f"volume {row[1]!r} is not a number", where) from None
        if not math.isfinite(volume) or volume < 0:
            raise ParseError(f"volume {row[1]!r} must be finite and non-negative", where)
        if stamps and stamp != stamps[-1] + 1:
            raise GapError(f"timestamp {stamp} does not follow {stamps[-1]}", where)
        stamps.append(stamp)
        values.append(volume)
    if not values:
        raise DataError("traffic file holds no rows", str(path))
    return TrafficSeries(np.asarray(values), start_time=stamps[0])


# -- accidents ---------------------------------------------------------------

def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_accidents_csv(records, path) -> None:
    names = sorted(records[0].features) if records else []
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(names + [SEVERITY_COLUMN])
        for r in records:
            if sorted(r.features) != names:
                raise SchemaError("records do not share one feature set")
            writer.writerow([_cell(r.features[n]) for n in names] + [r.severity.label])


def _parse_number(token: str):
    try:
        return float(token)
    except ValueError:
        return None


def load_accidents_csv(path) -> list[AccidentRecord]:
    """Accident records; a column is numeric when every non-empty cell parses as a number.

    Empty cells load as ``None`` (missing).
    """
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise SchemaError("accident file is empty", f"{path}:1")
    header = [c.strip() for c in rows[0]]
    if SEVERITY_COLUMN not in header:
        raise SchemaError(f"missing {SEVERITY_COLUMN!r} column", f"{path}:1")
    if header[-1] != SEVERITY_COLUMN:
        raise SchemaError(f"{SEVERITY_COLUMN!r} must be the final column", f"{path}:1")
    names = header[:-1]
    if len(set(names)) != len(names) or any(not n for n in names):
        raise SchemaError("feature names must be unique and non-empty", f"{path}:1")

    body = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise ParseError(f"expected {len(header)} fields, got {len(row)}", f"{path}:{lineno}")
        body.append((lineno, row))

    numeric = []
    for j in range(len(names)):
        cells = [row[j] for _, row in body if row[j] != ""]
        numeric.append(bool(cells) and all(_parse_number(c) is not None for c in cells))

    records = []
    for lineno, row in body:
        where = f"{path}:{lineno}"
        try:
            severity = Severity.parse(row[-1])
        except (ValueError, KeyError, DataError):
            raise ParseError(f"unknown severity {row[-1]!r}", where) from None
        feats = {}
        for j, name in enumerate(names):
            token = row[j]
            if token == "":
                feats[name] = None
            elif numeric[j]:
                value = float(token)
                if not math.isfinite(value):
                    raise ParseError(f"non-finite value in column {name!r}", where)
                feats[name] = value
            else:
                feats[name] = token
        records.append(AccidentRecord(feats, severity))
    return records


# -- images ------------------------------------------------------------------

def write_image_dir(samples, root) -> None:
    """Write ``root/<label>/<index>.pgm`` (or ``.ppm`` for 3 channels), 8-bit binary."""
    root = Path(root)
    for label in IMAGE_LABELS:
        (root / label).mkdir(parents=True, exist_ok=True)
    width = max(5, len(str(len(samples))))
    for i, s in enumerate(samples):
        data = np.round(s.pixels * 255.0).astype(np.uint8)
        if data.shape[2] == 1:
            img, suffix = Image.fromarray(data[:, :, 0], mode="L"), ".pgm"
        else:
            img, suffix = Image.fromarray(data, mode="RGB"), ".ppm"
        img.save(root / s.label.label / f"{i:0{width}d}{suffix}")


def _read_image(path: Path, size, grayscale) -> np.ndarray:
    try:
        with Image.open(path) as img:
            if img.format not in ("PPM",):
                raise ParseError(f"not a PGM/PPM file (format {img.format})", str(path))
            if img.mode not in ("L", "RGB"):
                raise ParseError(f"unsupported pixel mode {img.mode}", str(path))
            if grayscale and img.mode == "RGB":
                img = img.convert("L")
            if size is not None and img.size != (size, size):
                img = img.resize((size, size), Image.BILINEAR)
            data = np.asarray(img, dtype=np.float64)
    except (UnidentifiedImageError, OSError, SyntaxError, ValueError) as exc:
        if isinstance(exc, ParseError):
            raise
        raise ParseError(f"unreadable image: {exc}", str(path)) from None
    data = data / 255.0
    return data[:, :, None] if data.ndim == 2 else data


def load_image_dir(root, size=None, grayscale=False) -> list[ImageSample]:
    """Images from class-named subdirectories, ordered by file name.

    ``size`` resamples every image to ``size`` x ``size``; ``grayscale``
    converts color images to one channel.
    """
    root = Path(root)
    if not root.is_dir():
        raise DataError("image directory does not exist", str(root))
    entries = []
    for sub in sorted(os.listdir(root)):
        path = root / sub
        if not path.is_dir():
            continue
        if sub not in IMAGE_LABELS:
            raise SchemaError(f"unknown image class directory {sub!r}", str(path))
        label = ImageClass.parse(sub)
        for name in sorted(os.listdir(path)):
            if Path(name).suffix.lower() in IMAGE_SUFFIXES:
                entries.append((name, int(label), path / name))
    entries.sort(key=lambda e: (e[0], e[1]))
    samples = []
    for _, label, path in entries:
        pixels = _read_image(path, size, grayscale)
        try:
            samples.append(ImageSample(pixels, ImageClass(label)))
        except DataError as exc:
            raise ParseError(str(exc), str(path)) from None
    return samples
