"""Label-preserving image augmentation: flips, quarter turns and bilinear rescaling."""

from __future__ import annotations

import numpy as np

from ..exceptions import ConfigError, DataError

OPS = ("flip_h", "flip_v", "rot90", "scale")
SCALE_RANGE = (0.8, 1.2)  # sampled when no factor is given
SCALE_LIMITS = (0.5, 2.0)


def flip_h(image):
    return image[:, ::-1].copy()


def flip_v(image):
    return image[::-1].copy()


def rot90(image, k=1):
    """Counter-clockwise quarter turns; non-square images keep their shape only for even k."""
    return np.rot90(image, k, axes=(0, 1)).copy()


def scale(image, s):
    """Zoom about the center by ``s`` with bilinear interpolation.

    Output keeps the input shape: zooming in crops the center, zooming out
    pads the border with zeros. Interpolation clamps neighbors at the edge.
    """
    if not SCALE_LIMITS[0] <= s <= SCALE_LIMITS[1]:
        raise ConfigError(f"scale factor {s} outside [{SCALE_LIMITS[0]}, {SCALE_LIMITS[1]}]")
    h, w = image.shape[:2]
    cy, cx = (h - 1) / 2, (w - 1) / 2
    sy = (np.arange(h) - cy) / s + cy
    sx = (np.arange(w) - cx) / s + cx
    inside = ((sy >= -0.5) & (sy <= h - 0.5))[:, None] & ((sx >= -0.5) & (sx <= w - 0.5))[None, :]
    y0 = np.floor(sy).astype(int)
    x0 = np.floor(sx).astype(int)
    fy = (sy - y0)[:, None, None]
    fx = (sx - x0)[None, :, None]
    y0c, y1c = np.clip(y0, 0, h - 1), np.clip(y0 + 1, 0, h - 1)
    x0c, x1c = np.clip(x0, 0, w - 1), np.clip(x0 + 1, 0, w - 1)
    img = image if image.ndim == 3 else image[:, :, None]
    top = img[y0c][:, x0c] * (1 - fx) + img[y0c][:, x1c] * fx
    bottom = img[y1c][:, x0c] * (1 - fx) + img[y1c][:, x1c] * fx
    out = top * (1 - fy) + bottom * fy
    out = np.where(inside[:, :, None], out, 0.0)
    out = np.clip(out, 0.0, 1.0)
    return out if image.ndim == 3 else out[:, :, 0]


def augment(image, op, param=None, seed=None):
    """Apply one augmentation.

    ``param`` is the quarter-turn count for ``rot90`` and the zoom factor
    for ``scale``; when omitted it is drawn from ``seed`` (k in 1..3,
    s uniform in [0.8, 1.2]).
    """
    image = np.asarray(image, dtype=float)
    if image.size and (image.min() < 0 or image.max() > 1):
        raise DataError("augment expects pixel values in [0, 1]")
    if op == "flip_h":
        return flip_h(image)
    if op == "flip_v":
        return flip_v(image)
    rng = np.random.default_rng(seed)
    if op == "rot90":
        k = int(rng.integers(1, 4)) if param is None else int(param)
        return rot90(image, k)
    if op == "scale":
        s = float(rng.uniform(*SCALE_RANGE)) if param is None else float(param)
        return scale(image, s)
    raise ConfigError(f"unknown augmentation {op!r}; expected one of {', '.join(OPS)}")


def random_augment(image, rng):
    """One uniformly chosen op with random parameters, drawn from ``rng``."""
    op = OPS[int(rng.integers(len(OPS)))]
    if op == "rot90":
        return rot90(image, int(rng.integers(1, 4)))
    if op == "scale":
        return scale(image, float(rng.uniform(*SCALE_RANGE)))
    return flip_h(image) if op == "flip_h" else flip_v(image)
