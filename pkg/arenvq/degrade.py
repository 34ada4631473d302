"""
Corruptions for the restoration tasks: blind pixel masking, Gaussian noise and
separable Gaussian blur.

All functions take (b, h, w, 3) arrays in [0, 1] and are deterministic given
their seed; image i of a batch draws from its own stream derived from
(seed, i).
"""
import numpy as np
from arenvq.errors import ContractError
from arenvq.util import derive_seed, memoize

KINDS = ("none", "mask", "noise", "blur")
VALUE_RANGE = (0.0, 1.0)

TRAIN_MASK_FRACTION = 0.5
TRAIN_NOISE_SIGMA = 0.3
TRAIN_BLUR_SIGMA = (1.0, 5.0)
TRAIN_BLUR_SIZE = (3, 15)


def _batch(img):
    img = np.asarray(img)
    if img.ndim == 3:
        img = img[np.newaxis]
    if img.ndim != 4:
        raise ContractError("Expected (b, h, w, c) images, got shape {}".format(img.shape))
    return img


def _image_rng(seed, index):
    return np.random.default_rng(derive_seed(seed, index))


def blind_mask(img, fraction, seed):
    """
    Zero exactly floor(fraction*h*w) pixels per image, chosen without replacement.

    Returns (masked, mask) where mask is (b, h, w, 1), 1 at kept pixels.
    """
    if not 0.0 <= fraction <= 1.0:
        raise ContractError("Mask fraction must be in [0, 1], got {}".format(fraction))
    img = _batch(img)
    batch, height, width, _ = img.shape
    pixels = height * width
    count = int(np.floor(fraction * pixels))
    mask = np.ones((batch, pixels), dtype=img.dtype)
    for i in range(batch):
        order = _image_rng(seed, i).permutation(pixels)
        mask[i, order[:count]] = 0
    mask = mask.reshape(batch, height, width, 1)
    return img * mask, mask


def sample_noise(shape, std, seed):
    """The pre-clamp noise field gaussian_noise adds, one stream per image."""
    noise = np.empty(shape, dtype=np.float64)
    for i in range(shape[0]):
        noise[i] = _image_rng(seed, i).standard_normal(shape[1:])
    return noise * std


def gaussian_noise(img, sigma_frac, seed, value_range=VALUE_RANGE):
    """Add N(0, (sigma_frac * dynamic range)^2) noise and clamp to the range."""
    if sigma_frac < 0:
        raise ContractError("Noise sigma must be >= 0, got {}".format(sigma_frac))
    img = _batch(img)
    low, high = value_range
    if sigma_frac == 0:
        return img.copy()
    noise = sample_noise(img.shape, sigma_frac * (high - low), seed)
    return np.clip(img + noise, low, high).astype(img.dtype)


@memoize
def gaussian_kernel(size, sigma):
    """Normalized 1-D Gaussian taps; read-only because it is cached."""
    if size < 1 or size % 2 == 0:
        raise ContractError("Gaussian kernel size must be odd, got {}".format(size))
    if sigma <= 0:
        raise ContractError("Gaussian sigma must be > 0, got {}".format(sigma))
    offsets = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    taps = np.exp(-offsets ** 2 / (2.0 * sigma ** 2))
    taps /= taps.sum()
    taps.setflags(write=False)
    return taps


def _filter_axis(img, taps, axis):
    radius = len(taps) // 2
    pad = [(0, 0)] * img.ndim
    pad[axis] = (radius, radius)
    padded = np.pad(img, pad, mode="symmetric")
    out = np.zeros(img.shape, dtype=np.float64)
    length = img.shape[axis]
    for k, tap in enumerate(taps):
        out += tap * np.take(padded, np.arange(k, k + length), axis=axis)
    return out


def gaussian_blur(img, sx, sy, kx, ky):
    """
    Separable Gaussian blur: (kx, sx) along the width, (ky, sy) along the height,
    mirrored borders.
    """
    img = _batch(img)
    taps_x = gaussian_kernel(int(kx), float(sx))
    taps_y = gaussian_kernel(int(ky), float(sy))
    out = _filter_axis(_filter_axis(img.astype(np.float64), taps_y, 1), taps_x, 2)
    return out.astype(img.dtype)


class DegradeSpec(object):
    """A corruption: which kind, its parameters and the seed."""

    def __init__(self, kind="none", mask_fraction=TRAIN_MASK_FRACTION,
                 noise_sigma=TRAIN_NOISE_SIGMA, blur_sigma=TRAIN_BLUR_SIGMA,
                 blur_size=TRAIN_BLUR_SIZE, seed=0):
        self.kind = kind
        self.mask_fraction = mask_fraction
        self.noise_sigma = noise_sigma
        self.blur_sigma = tuple(blur_sigma)
        self.blur_size = tuple(blur_size)
        self.seed = seed

    def problems(self):
        problems = []
        if self.kind not in KINDS:
            problems.append('task kind "{}" is not one of {}'.format(self.kind, ", ".join(KINDS)))
        if not 0.0 <= self.mask_fraction <= 1.0:
            problems.append("mask fraction {} is outside [0, 1]".format(self.mask_fraction))
        if not 0.0 <= self.noise_sigma <= 1.0:
            problems.append("noise sigma {} is outside [0, 1]".format(self.noise_sigma))
        if len(self.blur_sigma) != 2 or min(self.blur_sigma) <= 0:
            problems.append("blur sigmas {} must be two positive numbers".format(self.blur_sigma))
        if len(self.blur_size) != 2 or any(k < 1 or k % 2 == 0 for k in self.blur_size):
            problems.append("blur kernel sizes {} must be two odd integers".format(self.blur_size))
        return problems

    def validate(self):
        problems = self.problems()
        if problems:
            raise ContractError("; ".join(problems))
        return self

    @property
    def is_identity(self):
        return (self.kind == "none"
            or (self.kind == "mask" and self.mask_fraction == 0)
            or (self.kind == "noise" and self.noise_sigma == 0))

    def with_value(self, value):
        """Copy with the kind's sweep parameter replaced."""
        spec = DegradeSpec(self.kind, self.mask_fraction, self.noise_sigma,
            self.blur_sigma, self.blur_size, self.seed)
        if self.kind == "mask":
            spec.mask_fraction = value
        elif self.kind == "noise":
            spec.noise_sigma = value
        elif self.kind == "blur":
            spec.blur_sigma = tuple(value)
        return spec

    def apply(self, img, seed=None):
        """
        Corrupt a batch. Returns (corrupted, mask); mask is None unless kind is
        mask.
        """
        seed = self.seed if seed is None else seed
        if self.kind == "mask":
            return blind_mask(img, self.mask_fraction, seed)
        if self.kind == "noise":
            return gaussian_noise(img, self.noise_sigma, seed), None
        if self.kind == "blur":
            sx, sy = self.blur_sigma
            kx, ky = self.blur_size
            return gaussian_blur(img, sx, sy, kx, ky), None
        return _batch(img).copy(), None

    def __repr__(self):
        return "DegradeSpec(kind={}, seed={})".format(self.kind, self.seed)
