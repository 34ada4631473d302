"""
Evaluation sweeps and single-image restoration.
"""
import csv
import logging
import os
import numpy as np
from PIL import Image
from arenvq.dataset import load_image, load_mask
from arenvq.errors import ContractError, DataError
from arenvq.grid import emit_grid, save_png, to_uint8
from arenvq.metrics import CSV_HEADER, evaluate_pairs
from arenvq.train import model_input, reconstruct_batches

logger = logging.getLogger(__name__)

METRICS_NAME = "metrics.csv"
GRID_IMAGES = 4

# (value, label) pairs swept for each task kind
SWEEPS = {
    "none": [(None, "clean")],
    "mask": [(0.3, "30"), (0.4, "40"), (0.5, "50"), (0.6, "60"), (0.7, "70")],
    "noise": [(0.2, "0.2"), (0.3, "0.3"), (0.4, "0.4")],
    "blur": [((1.0, 3.0), "(1,3)"), ((1.0, 5.0), "(1,5)"), ((1.0, 8.0), "(1,8)")],
}


def grid_name(kind, label):
    safe = label.strip("()").replace(",", "-")
    return "grid_{}_{}.png".format(kind, safe)


def evaluate_sweep(model, images, spec, mask_input, sigma, output_dir=None,
                   batch_size=16, grid_images=GRID_IMAGES):
    """
    Corrupt the images at every sweep value of the task, reconstruct and
    score them. Returns one MetricReport per sweep value; grids are written
    to output_dir when one is given.
    """
    images = np.asarray(images)
    if len(images) == 0:
        raise DataError("Nothing to evaluate: the test split is empty")
    reports = []
    for value, label in SWEEPS[spec.kind]:
        setting = spec if value is None else spec.with_value(value)
        corrupted, mask = setting.apply(images)
        model.reset_usage()
        model.set_instrumented(True)
        try:
            recons = reconstruct_batches(model, corrupted, mask, mask_input, batch_size)
        finally:
            model.set_instrumented(False)
        report = evaluate_pairs(spec.kind, label, recons, images, sigma)
        report.active = model.active_counts()
        reports.append(report)
        logger.info("%r, active vectors %s", report, report.active)

        if output_dir is not None:
            rows = [[corrupted[i], recons[i], images[i]]
                    for i in range(min(grid_images, len(images)))]
            emit_grid(rows, os.path.join(output_dir, grid_name(spec.kind, label)))
    return reports


def write_metrics(reports, path):
    try:
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(CSV_HEADER)
            for report in reports:
                writer.writerow(report.row())
    except OSError as e:
        raise DataError('Could not write metrics "{}": {}'.format(path, e))
    logger.info('Wrote %d metric rows to "%s"', len(reports), path)


def compatibility_problems(checkpoint_config, config):
    """Differences that make a checkpoint unusable with config."""
    problems = []
    model_fields = ("levels", "latent_dim", "codebook_size", "attention", "base_filters",
                    "level_filters", "decoder_filters")
    for field in model_fields:
        have = getattr(checkpoint_config.model, field)
        want = getattr(config.model, field)
        if have != want:
            problems.append("[model] {}: checkpoint has {}, config has {}".format(field, have, want))
    if checkpoint_config.in_channels != config.in_channels:
        problems.append("input channels: checkpoint has {}, config has {} (task {})".format(
            checkpoint_config.in_channels, config.in_channels, config.task.kind))
    if checkpoint_config.data.resolution != config.data.resolution:
        problems.append("[data] resolution: checkpoint has {}, config has {}".format(
            checkpoint_config.data.resolution, config.data.resolution))
    return problems


def restore_image(model, config, image_path, mask_path=None):
    """
    Reconstruct an already degraded image. Returns (input, reconstruction) as
    (h, w, 3) arrays at the model's resolution.
    """
    resolution = config.data.resolution
    try:
        with Image.open(image_path) as image:
            size = image.size
        img = load_image(image_path, resolution)
    except OSError as e:
        raise DataError('Could not read image "{}": {}'.format(image_path, e))
    if size != (resolution, resolution):
        logger.warning('Resizing "%s" from %dx%d to %dx%d', image_path, size[0], size[1],
            resolution, resolution)

    mask = None
    if config.mask_input:
        if mask_path is None:
            raise ContractError("This checkpoint restores masked images; pass the mask with --mask")
        try:
            mask = load_mask(mask_path, resolution)[np.newaxis]
        except OSError as e:
            raise DataError('Could not read mask "{}": {}'.format(mask_path, e))
    elif mask_path is not None:
        logger.warning('Ignoring mask "%s": the checkpoint does not take a mask', mask_path)

    batch = img[np.newaxis].astype(model.params.dtype)
    recon = model.reconstruct(model_input(batch, mask, config.mask_input))[0]
    return img, np.clip(recon, 0.0, 1.0)


def write_restoration(img, recon, output_path):
    """Write the reconstruction and an (input | reconstruction) grid next to it."""
    save_png(to_uint8(recon), output_path)
    root, _ = os.path.splitext(output_path)
    grid_path = root + "_grid.png"
    emit_grid([[img, recon]], grid_path)
    logger.info('Wrote "%s" and "%s"', output_path, grid_path)
    return output_path, grid_path
