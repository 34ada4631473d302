from __future__ import print_function
import click
import csv
import sys
import time
import numpy as np
from arenvq import tensor as T
from arenvq.adversarial import PatchDiscriminator
from arenvq.aren import AttentiveVQVAE
from arenvq.checkpoint import load_checkpoint
from arenvq.cli.options import config_options, resolve_config
from arenvq.dataset import Dataset, synthetic_images
from arenvq.train import Trainer


def _shape(tensor):
    return "x".join(str(n) for n in tensor.shape[1:])


def parameter_rows(model, discriminator):
    rows = list(model.param_counts().items())
    rows.append(("total", model.params.count()))
    rows.append(("discriminator", discriminator.param_count()))
    return rows


def shape_rows(model, discriminator, resolution):
    """Per-stage output shapes of one forward pass on a random image."""
    img = np.random.default_rng(0).uniform(size=(1, resolution, resolution, model.in_channels))
    model.eval()
    discriminator.eval()
    with T.no_grad():
        x = T.Tensor(img, dtype=model.params.dtype)
        base = model.base(x)
        encoded = model.hierarchy(base)
        recon = model.decode(encoded.quantized_bottom)
        logits = discriminator(recon)
    rows = [("shape:base", _shape(base))]
    for level, output in zip(model.hierarchy.levels, encoded.aren_outputs):
        rows.append(("shape:level{}".format(level.spec.level), _shape(output)))
    rows.append(("shape:recon", _shape(recon)))
    rows.append(("shape:discriminator", _shape(logits)))
    return rows


def timing_rows(config, steps):
    """Seconds per training step on generated images; relative numbers only."""
    images = synthetic_images(config.train.batch_size, config.data.resolution, config.data.seed)
    trainer = Trainer(config, Dataset(images, split=1.0, seed=config.data.seed))
    batch = images[:config.train.batch_size]
    trainer.train_step(batch)
    started = time.perf_counter()
    for _ in range(steps):
        trainer.train_step(batch)
    return [("seconds_per_step", "{:.3f}".format((time.perf_counter() - started) / steps))]


@click.command()
@config_options
@click.option("--checkpoint", type=click.Path(exists=True, dir_okay=False),
    help="Inspect this checkpoint's model instead of the configured one.")
@click.option("--format", "-f", "format", type=click.Choice(["table", "csv"]),
    default="table", show_default=True)
@click.option("--shapes", is_flag=True, default=False,
    help="Also run one forward pass and report stage shapes.")
@click.option("--time", "time_steps", default=0, show_default=True,
    help="Also time this many training steps.")
def inspect(checkpoint, format, shapes, time_steps, **options):
    """Report parameter counts per module (and optionally shapes and timings)."""
    checkpoint = load_checkpoint(checkpoint) if checkpoint else None
    config = resolve_config(options, checkpoint).validate(require_data=False)
    if checkpoint is not None:
        model = checkpoint.build_model()
    else:
        model = AttentiveVQVAE.from_run_config(config)
    discriminator = PatchDiscriminator.from_run_config(config)

    rows = parameter_rows(model, discriminator)
    if shapes:
        rows.extend(shape_rows(model, discriminator, config.data.resolution))
    if time_steps > 0:
        rows.extend(timing_rows(config, time_steps))

    if format == "csv":
        writer = csv.writer(sys.stdout)
        writer.writerow(["module", "value"])
        for row in rows:
            writer.writerow(row)
    else:
        for name, value in rows:
            print("{:<24} {:>14}".format(name, value))
