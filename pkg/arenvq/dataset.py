"""
Image folders and synthetic image sets, split deterministically into train and
test, normalized to [0, 1].
"""
import logging
import os
import numpy as np
from PIL import Image, UnidentifiedImageError
from arenvq.errors import DataError
from arenvq.util import derive_seed

logger = logging.getLogger(__name__)

EXTENSIONS = (".png", ".jpg", ".jpeg", ".bmp", ".gif", ".tif", ".tiff", ".webp")


def load_image(path, resolution=None):
    """
    Decode an image to float32 RGB in [0, 1], center-cropped to a square and
    resized to resolution when one is given.
    """
    with Image.open(path) as image:
        image = image.convert("RGB")
        if resolution is not None:
            width, height = image.size
            side = min(width, height)
            left = (width - side) // 2
            top = (height - side) // 2
            image = image.crop((left, top, left + side, top + side))
            if side != resolution:
                image = image.resize((resolution, resolution), Image.Resampling.BICUBIC)
        return np.asarray(image, dtype=np.float32) / 255.0


def load_mask(path, resolution=None):
    """A mask image as (h, w, 1): 1 where the pixel is kept."""
    with Image.open(path) as image:
        image = image.convert("L")
        if resolution is not None and image.size != (resolution, resolution):
            image = image.resize((resolution, resolution), Image.Resampling.NEAREST)
        mask = np.asarray(image, dtype=np.float32) / 255.0
    return (mask >= 0.5).astype(np.float32)[:, :, np.newaxis]


def image_paths(directory):
    if not os.path.isdir(directory):
        raise DataError('Image directory "{}" does not exist'.format(directory))
    return sorted(
        os.path.join(directory, name) for name in os.listdir(directory)
        if name.lower().endswith(EXTENSIONS))


def synthetic_images(count, resolution, seed=0):
    """Smooth colour blobs over a gradient; stand-in data for desk runs."""
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:resolution, 0:resolution] / float(resolution)
    images = np.empty((count, resolution, resolution, 3), dtype=np.float32)
    for i in range(count):
        start, end = rng.uniform(0.1, 0.9, size=(2, 3))
        angle = rng.uniform(0, 2 * np.pi)
        ramp = np.cos(angle) * xx + np.sin(angle) * yy
        ramp = (ramp - ramp.min()) / max(np.ptp(ramp), 1e-6)
        image = start + ramp[..., np.newaxis] * (end - start)
        for _ in range(3):
            cy, cx = rng.uniform(0.2, 0.8, size=2)
            radius = rng.uniform(0.08, 0.25)
            colour = rng.uniform(0.0, 1.0, size=3)
            blob = np.exp(-((yy - cy) ** 2 + (xx - cx) ** 2) / (2 * radius ** 2))
            image = image * (1 - blob[..., np.newaxis]) + colour * blob[..., np.newaxis]
        images[i] = np.clip(image, 0.0, 1.0)
    return images


def split_indices(count, split, seed):
    """(train, test) index arrays from a seeded permutation."""
    order = np.random.default_rng(seed).permutation(count)
    n_train = int(np.floor(split * count + 0.5))
    return np.sort(order[:n_train]), np.sort(order[n_train:])


class Dataset(object):
    def __init__(self, images, split=0.8, seed=0, paths=None, skipped=0):
        self.images = np.asarray(images, dtype=np.float32)
        self.split = split
        self.seed = seed
        self.paths = list(paths) if paths is not None else None
        self.skipped = skipped
        self.train_indices, self.test_indices = split_indices(len(self.images), split, seed)
        logger.info("Dataset: %d images (%d train, %d test), pixel range [%.3f, %.3f]",
            len(self.images), len(self.train_indices), len(self.test_indices),
            float(self.images.min()), float(self.images.max()))

    @property
    def resolution(self):
        return self.images.shape[1]

    def __len__(self):
        return len(self.images)

    def subset(self, name):
        if name == "train":
            indices = self.train_indices
        elif name == "test":
            indices = self.test_indices
        else:
            raise ValueError('Unknown split "{}"'.format(name))
        if len(indices) == 0:
            raise DataError('The "{}" split is empty (split ratio {})'.format(name, self.split))
        return self.images[indices]

    def pixel_std(self):
        """Standard deviation of all training pixel values."""
        return float(np.std(self.subset("train"), dtype=np.float64))

    def batches(self, name, batch_size, epoch, shuffle=True):
        """Batches of a split in an order fixed by (seed, epoch)."""
        images = self.subset(name)
        order = np.arange(len(images))
        if shuffle:
            order = np.random.default_rng(derive_seed(self.seed, epoch)).permutation(len(images))
        for start in range(0, len(order), batch_size):
            yield images[order[start:start + batch_size]]


def load_dataset(directory, resolution, split=0.8, seed=0):
    images = []
    paths = []
    skipped = 0
    for path in image_paths(directory):
        try:
            images.append(load_image(path, resolution))
            paths.append(path)
        except (OSError, UnidentifiedImageError, ValueError) as e:
            logger.warning('Skipping unreadable image "%s": %s', path, e)
            skipped += 1

    if not images:
        raise DataError('No usable images in "{}" ({} unreadable)'.format(directory, skipped))
    if len(images) < 2:
        raise DataError('Need at least 2 images in "{}", found {}'.format(directory, len(images)))
    logger.info('Loaded %d images from "%s" [%d skipped]', len(images), directory, skipped)
    return Dataset(np.stack(images), split, seed, paths=paths, skipped=skipped)


def open_dataset(data):
    """The Dataset a [data] config section describes."""
    if data.synthetic > 0:
        logger.info("Generating %d synthetic %dx%d images", data.synthetic,
            data.resolution, data.resolution)
        return Dataset(synthetic_images(data.synthetic, data.resolution, data.seed),
            data.split, data.seed)
    return load_dataset(data.dir, data.resolution, data.split, data.seed)
