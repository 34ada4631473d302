import click
import logging
import shutil
from arenvq.cli.options import NumberPair
from arenvq.dataset import load_image
from arenvq.degrade import DegradeSpec
from arenvq.errors import DataError
from arenvq.grid import save_png, to_uint8


@click.command()
@click.argument("source", type=click.Path(exists=True, dir_okay=False))
@click.argument("destination", type=click.Path(dir_okay=False))
@click.option("--mask", "mask_fraction", type=float, help="Fraction of pixels to zero.")
@click.option("--noise", "noise_sigma", type=float,
    help="Noise standard deviation as a fraction of the value range.")
@click.option("--blur", "blur_sigma", type=NumberPair(float), help="Blur sigmas sx,sy.")
@click.option("--ksize", "blur_size", type=NumberPair(int), default="3,15", show_default=True,
    help="Blur kernel sizes kx,ky.")
@click.option("--seed", default=0, show_default=True)
@click.option("--mask-output", type=click.Path(dir_okay=False),
    help="Also write the mask (white = kept) here.")
def corrupt(source, destination, mask_fraction, noise_sigma, blur_sigma, blur_size, seed,
            mask_output):
    """
    Degrade an image with one of --mask, --noise or --blur.

    Deterministic for a given seed, for building evaluation fixtures.
    """
    logger = logging.getLogger(__name__)
    chosen = [name for name, value in (("--mask", mask_fraction), ("--noise", noise_sigma),
              ("--blur", blur_sigma)) if value is not None]
    if len(chosen) != 1:
        raise click.UsageError("Pass exactly one of --mask, --noise or --blur")

    if mask_fraction is not None:
        spec = DegradeSpec("mask", mask_fraction=mask_fraction, seed=seed)
    elif noise_sigma is not None:
        spec = DegradeSpec("noise", noise_sigma=noise_sigma, seed=seed)
    else:
        spec = DegradeSpec("blur", blur_sigma=blur_sigma, blur_size=blur_size, seed=seed)
    spec.validate()

    if spec.is_identity and mask_output is None:
        logger.info('Nothing to corrupt, copying "%s"', source)
        shutil.copyfile(source, destination)
        return

    try:
        img = load_image(source)
    except OSError as e:
        raise DataError('Could not read image "{}": {}'.format(source, e))
    corrupted, mask = spec.apply(img)
    if spec.is_identity:
        shutil.copyfile(source, destination)
    else:
        save_png(to_uint8(corrupted[0]), destination)
    if mask_output is not None and mask is not None:
        save_png(to_uint8(mask[0, :, :, 0]), mask_output)
    logger.info('Wrote %r of "%s" to "%s"', spec, source, destination)
