import click
from arenvq.checkpoint import load_checkpoint
from arenvq.degrade import KINDS
from arenvq.errors import ConfigError
from arenvq.evaluate import restore_image, write_restoration


@click.command()
@click.argument("checkpoint", type=click.Path(exists=True, dir_okay=False))
@click.argument("image", type=click.Path(exists=True, dir_okay=False))
@click.option("--output", "-o", required=True, type=click.Path(dir_okay=False),
    help="PNG to write the reconstruction to.")
@click.option("--mask", "mask_path", type=click.Path(exists=True, dir_okay=False),
    help="Mask image (white = kept) for checkpoints trained on masking.")
@click.option("--task", type=click.Choice(KINDS),
    help="Degradation the image has; must be the one the checkpoint was trained on.")
def restore(checkpoint, image, output, mask_path, task):
    """
    Restore an already degraded image.

    The image should carry the degradation the checkpoint was trained to undo
    ([task] kind in its configuration). Writes the reconstruction and
    OUTPUT_grid.png with the input beside it.
    """
    checkpoint = load_checkpoint(checkpoint)
    trained_on = checkpoint.config.task.kind
    if task is not None and task != trained_on:
        raise ConfigError(['Checkpoint "{}" was trained for task "{}", not "{}"'
            .format(checkpoint.path, trained_on, task)])
    model = checkpoint.build_model()
    img, recon = restore_image(model, checkpoint.config, image, mask_path)
    output, grid = write_restoration(img, recon, output)
    click.echo(output)
    click.echo(grid)
