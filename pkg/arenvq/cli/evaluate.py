from __future__ import print_function
import click
import csv
import logging
import os
import sys
from arenvq.checkpoint import load_checkpoint
from arenvq.cli.options import config_options, resolve_config
from arenvq.dataset import open_dataset
from arenvq.evaluate import METRICS_NAME, evaluate_sweep, write_metrics
from arenvq.metrics import CSV_HEADER


@click.command("eval")
@click.argument("checkpoint", type=click.Path(exists=True, dir_okay=False))
@config_options
@click.option("--grid-images", default=4, show_default=True,
    help="Test images shown in each grid.")
@click.option("--format", "-f", "format", type=click.Choice(["table", "csv"]),
    default="table", show_default=True)
def evaluate(checkpoint, grid_images, format, **options):
    """
    Evaluate a checkpoint on the test split.

    Sweeps the corruption strength of the task (mask 30-70%, noise 0.2-0.4,
    blur (1,3)-(1,8)), writes metrics.csv and one comparison grid per sweep
    value to the output directory.
    """
    logger = logging.getLogger(__name__)
    checkpoint = load_checkpoint(checkpoint)
    config = resolve_config(options, checkpoint).validate()
    model = checkpoint.build_model()
    dataset = open_dataset(config.data)
    sigma = dataset.pixel_std()
    test = dataset.subset("test")
    logger.info("Evaluating on %d test images (sigma %.6f)", len(test), sigma)

    os.makedirs(config.output_dir, exist_ok=True)
    reports = evaluate_sweep(model, test, config.task.degrade_spec().validate(),
        config.mask_input, sigma, config.output_dir, config.train.batch_size, grid_images)
    write_metrics(reports, os.path.join(config.output_dir, METRICS_NAME))

    if format == "csv":
        writer = csv.writer(sys.stdout)
        writer.writerow(CSV_HEADER)
        for report in reports:
            writer.writerow(report.row())
    else:
        print("{:<6} {:<8} {:>9} {:>7} {:>9} {:>5}  active".format(
            "task", "param", "PSNR", "SSIM", "MAE/sig", "n"))
        for report in reports:
            print("{:<6} {:<8} {:>9.3f} {:>7.4f} {:>9.4f} {:>5}  {}".format(
                report.task, report.param, report.psnr_db, report.ssim,
                report.mae_over_sigma, report.n_images, report.active))
