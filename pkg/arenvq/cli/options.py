"""
Options shared by the commands that build or load a run configuration.
"""
import click
from arenvq.config import load_config, override_config
from arenvq.degrade import KINDS
from arenvq.errors import ConfigError
from arenvq.evaluate import compatibility_problems


class NumberPair(click.ParamType):
    """Two comma-separated numbers, like "1,5"."""
    name = "x,y"

    def __init__(self, number=float):
        self.number = number

    def convert(self, value, param, ctx):
        if isinstance(value, tuple):
            return value
        try:
            first, second = (self.number(part) for part in value.split(","))
        except ValueError:
            self.fail('"{}" is not two comma-separated numbers'.format(value), param, ctx)
        return first, second


# option name -> (section, key)
OVERRIDES = {
    "levels": ("model", "levels"),
    "attention": ("model", "attention"),
    "latent_dim": ("model", "latent_dim"),
    "codebook_size": ("model", "codebook_size"),
    "mask_input": ("model", "mask_input"),
    "data_dir": ("data", "dir"),
    "synthetic": ("data", "synthetic"),
    "resolution": ("data", "resolution"),
    "split": ("data", "split"),
    "epochs": ("train", "epochs"),
    "max_steps": ("train", "max_steps"),
    "batch_size": ("train", "batch_size"),
    "lr": ("train", "lr"),
    "beta": ("train", "beta"),
    "adv_weight": ("train", "adv_weight"),
    "dtype": ("train", "dtype"),
    "task": ("task", "kind"),
    "mask_fraction": ("task", "mask_fraction"),
    "noise_sigma": ("task", "noise_sigma"),
    "blur_sigma": ("task", "blur_sigma"),
    "blur_size": ("task", "blur_size"),
    "output_dir": ("output", "dir"),
}

SEEDED_SECTIONS = ("data", "train", "task")


def config_options(f):
    options = [
        click.option("--config", "-c", "config_path", type=click.Path(dir_okay=False),
            help="INI file layered over the packaged defaults."),
        click.option("--levels", type=int, help="Number of AREN levels (1-3)."),
        click.option("--attention/--no-attention", default=None,
            help="Pixel attention in every level."),
        click.option("--latent-dim", type=int, help="Latent and codebook dimension."),
        click.option("--codebook-size", type=int, help="Entries per codebook."),
        click.option("--mask-input", type=click.Choice(["auto", "yes", "no"])),
        click.option("--data-dir", type=click.Path(file_okay=False), help="Image folder."),
        click.option("--synthetic", type=int,
            help="Generate this many images instead of reading a folder."),
        click.option("--resolution", type=int),
        click.option("--split", type=float, help="Training fraction of the images."),
        click.option("--epochs", type=int),
        click.option("--max-steps", type=int, help="Stop after this many steps (0: no limit)."),
        click.option("--batch-size", type=int),
        click.option("--lr", type=float, help="Adam learning rate."),
        click.option("--beta", type=float, help="Commitment loss weight."),
        click.option("--adv-weight", type=float, help="Weight of the adversarial loss."),
        click.option("--dtype", type=click.Choice(["float32", "float64"])),
        click.option("--task", type=click.Choice(KINDS), help="Restoration task."),
        click.option("--mask-fraction", type=float),
        click.option("--noise-sigma", type=float),
        click.option("--blur-sigma", type=NumberPair(float)),
        click.option("--blur-size", type=NumberPair(int)),
        click.option("--seed", type=int, help="Seed for the data split, training and corruption."),
        click.option("--output-dir", "-o", type=click.Path(file_okay=False),
            help="Where checkpoints, metrics and grids go."),
    ]
    for option in reversed(options):
        f = option(f)
    return f


def overrides(options):
    result = {}
    for name, key in OVERRIDES.items():
        if options.get(name) is not None:
            result[key] = options[name]
    if options.get("seed") is not None:
        for section in SEEDED_SECTIONS:
            result[(section, "seed")] = options["seed"]
    return result


def resolve_config(options, checkpoint=None):
    """
    The effective configuration for a command.

    Without --config, a checkpoint's embedded configuration is the base that
    flags override. A checkpoint whose model does not fit the result is
    refused with the list of differences.
    """
    path = options.get("config_path")
    if checkpoint is not None and path is None:
        config = override_config(checkpoint.config, overrides(options))
    else:
        config = load_config(path, overrides(options))

    if checkpoint is not None:
        problems = compatibility_problems(checkpoint.config, config)
        if problems:
            raise ConfigError(['Checkpoint "{}" does not fit this configuration'
                .format(checkpoint.path)] + problems)
    return config
