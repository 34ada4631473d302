"""
Reconstruction metrics: MAE/sigma, PSNR and SSIM.
"""
import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from arenvq.degrade import gaussian_kernel
from arenvq.errors import ContractError

PSNR_CAP = 99.0

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03
LUMA = np.array([0.299, 0.587, 0.114])

CSV_HEADER = ["task", "param", "psnr_db", "ssim", "mae_over_sigma", "n_images"]


def _pair(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ContractError("Metric inputs differ in shape: {} vs {}".format(a.shape, b.shape))
    return a, b


def mae_over_sigma(recon, ref, sigma):
    """Mean absolute error over all pixels and channels, divided by sigma."""
    if sigma <= 0:
        raise ContractError("sigma must be > 0, got {}".format(sigma))
    recon, ref = _pair(recon, ref)
    return float(np.mean(np.abs(recon - ref)) / sigma)


def psnr(a, b, max_val=1.0):
    """10 log10(max^2 / MSE); identical inputs give PSNR_CAP."""
    if max_val <= 0:
        raise ContractError("max_val must be > 0, got {}".format(max_val))
    a, b = _pair(a, b)
    mse = np.mean((a - b) ** 2)
    if mse == 0:
        return PSNR_CAP
    return float(min(10.0 * np.log10(max_val ** 2 / mse), PSNR_CAP))


def grayscale(img):
    img = np.asarray(img, dtype=np.float64)
    if img.ndim == 3 and img.shape[2] == 3:
        return img @ LUMA
    if img.ndim == 3 and img.shape[2] == 1:
        return img[:, :, 0]
    if img.ndim == 2:
        return img
    raise ContractError("Expected an (h, w), (h, w, 1) or (h, w, 3) image, got {}"
        .format(img.shape))


def _window_mean(img, taps):
    """Gaussian-weighted mean over every window that fits entirely in the image."""
    size = len(taps)
    windows = sliding_window_view(img, (size, size))
    return np.einsum("ijkl,k,l->ij", windows, taps, taps)


def ssim(a, b, data_range=1.0):
    """
    Mean structural similarity of two images after conversion to luminance.

    11x11 Gaussian window (sigma 1.5), K1 = 0.01, K2 = 0.03.
    """
    a, b = _pair(a, b)
    a = grayscale(a)
    b = grayscale(b)
    if a.shape[0] < SSIM_WINDOW or a.shape[1] < SSIM_WINDOW:
        raise ContractError("SSIM needs images of at least {0}x{0}, got {1}x{2}"
            .format(SSIM_WINDOW, a.shape[0], a.shape[1]))
    taps = gaussian_kernel(SSIM_WINDOW, SSIM_SIGMA)
    c1 = (SSIM_K1 * data_range) ** 2
    c2 = (SSIM_K2 * data_range) ** 2

    mu_a = _window_mean(a, taps)
    mu_b = _window_mean(b, taps)
    var_a = _window_mean(a * a, taps) - mu_a * mu_a
    var_b = _window_mean(b * b, taps) - mu_b * mu_b
    cov = _window_mean(a * b, taps) - mu_a * mu_b

    numerator = (2 * mu_a * mu_b + c1) * (2 * cov + c2)
    denominator = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2)
    return float(np.mean(numerator / denominator))


class MetricReport(object):
    """Metrics of one evaluation setting, averaged over the images."""

    def __init__(self, task, param, psnr_values, ssim_values, mae_values, active=None):
        if not psnr_values:
            raise ContractError("A metric report needs at least one image")
        self.task = task
        self.param = param
        self.psnr_values = list(psnr_values)
        self.ssim_values = list(ssim_values)
        self.mae_values = list(mae_values)
        self.active = active

    @property
    def n_images(self):
        return len(self.psnr_values)

    @property
    def psnr_db(self):
        return float(np.mean(self.psnr_values))

    @property
    def ssim(self):
        return float(np.mean(self.ssim_values))

    @property
    def mae_over_sigma(self):
        return float(np.mean(self.mae_values))

    def row(self):
        return [self.task, self.param, "{:.6f}".format(self.psnr_db),
                "{:.6f}".format(self.ssim), "{:.6f}".format(self.mae_over_sigma),
                self.n_images]

    def __repr__(self):
        return "MetricReport({} {}: PSNR {:.3f} dB, SSIM {:.4f}, MAE/sigma {:.4f}, n={})".format(
            self.task, self.param, self.psnr_db, self.ssim, self.mae_over_sigma,
            self.n_images)


def evaluate_pairs(task, param, recons, refs, sigma):
    """Per-image metrics for aligned batches of reconstructions and references."""
    recons = np.clip(np.asarray(recons, dtype=np.float64), 0.0, 1.0)
    refs = np.asarray(refs, dtype=np.float64)
    return MetricReport(
        task, param,
        [psnr(r, t) for r, t in zip(recons, refs)],
        [ssim(r, t) for r, t in zip(recons, refs)],
        [mae_over_sigma(r, t, sigma) for r, t in zip(recons, refs)])
