"""
Side-by-side comparison grids saved as PNG.
"""
import logging
import numpy as np
from PIL import Image
from arenvq.errors import ContractError, DataError

logger = logging.getLogger(__name__)

SEPARATOR = 2
BACKGROUND = 255


def to_uint8(img):
    """Clamp to [0, 1] and round to 8-bit."""
    return np.round(np.clip(np.asarray(img, dtype=np.float64), 0.0, 1.0) * 255.0).astype(np.uint8)


def _rgb(img):
    img = np.asarray(img)
    if img.ndim == 2:
        img = img[:, :, np.newaxis]
    if img.ndim != 3 or img.shape[2] not in (1, 3):
        raise ContractError("Grid tiles must be (h, w, 1) or (h, w, 3), got {}".format(img.shape))
    if img.shape[2] == 1:
        img = np.repeat(img, 3, axis=2)
    return img


def tile(rows, separator=SEPARATOR):
    """
    Lay out rows of images as one uint8 array with white separators between
    tiles. Every tile must have the same height and width.
    """
    rows = [[_rgb(img) for img in row] for row in rows]
    if not rows or not all(rows):
        raise ContractError("A grid needs at least one image in every row")
    height, width = rows[0][0].shape[:2]
    for row in rows:
        for img in row:
            if img.shape[:2] != (height, width):
                raise ContractError("Grid tiles differ in size: {} vs {}"
                    .format(img.shape[:2], (height, width)))
    columns = max(len(row) for row in rows)
    grid = np.full((len(rows) * height + (len(rows) - 1) * separator,
                    columns * width + (columns - 1) * separator, 3),
                   BACKGROUND, dtype=np.uint8)
    for r, row in enumerate(rows):
        top = r * (height + separator)
        for c, img in enumerate(row):
            left = c * (width + separator)
            grid[top:top + height, left:left + width] = to_uint8(img)
    return grid


def save_png(array, path):
    try:
        Image.fromarray(array).save(path, format="PNG")
    except (OSError, ValueError) as e:
        raise DataError('Could not write image "{}": {}'.format(path, e))


def emit_grid(rows, path):
    """Write rows of (corrupted | reconstruction | ground truth) tiles to path."""
    grid = tile(rows)
    save_png(grid, path)
    logger.info('Wrote %dx%d grid "%s"', grid.shape[1], grid.shape[0], path)
    return path
