import click
import logging
from arenvq.checkpoint import load_checkpoint
from arenvq.cli.options import config_options, resolve_config
from arenvq.dataset import open_dataset
from arenvq.train import Trainer


@click.command()
@config_options
@click.option("--resume", type=click.Path(exists=True, dir_okay=False),
    help="Continue from a checkpoint, including optimizer and RNG state.")
def train(resume, **options):
    """
    Train a model.

    The effective configuration and a checkpoint (after every epoch) are
    written to the output directory.
    """
    logger = logging.getLogger(__name__)
    checkpoint = load_checkpoint(resume) if resume else None
    config = resolve_config(options, checkpoint).validate()
    logger.info("Training %d-level model (attention %s, task %s) into \"%s\"",
        config.model.levels, config.model.attention, config.task.kind, config.output_dir)

    trainer = Trainer(config, open_dataset(config.data), checkpoint)
    history = trainer.run()
    if history:
        click.echo("Trained to step {}: MAE/sigma {:.4f}, active vectors {}".format(
            trainer.step, history[-1]["mae_over_sigma"], history[-1]["active"]))
    else:
        click.echo("Nothing to do: already at step {}".format(trainer.step))
    click.echo("Checkpoint: {}".format(trainer.checkpoint_path))
