import click
import logging
import sys
from arenvq.errors import ArenError, ConfigError

_handler = None


def add_command_group(module):
    for attr in dir(module):
        object = getattr(module, attr)
        if isinstance(object, click.Command) and object.name not in cli.commands:
            cli.add_command(object)


def set_up_logging(level=logging.WARNING):
    global _handler
    logging.captureWarnings(True)

    format = "%(relativeCreated)7d %(name)s: %(message)s"

    handler = logging.StreamHandler(stream=sys.stdout)
    try:
        import colorlog
        handler.setFormatter(colorlog.ColoredFormatter("%(log_color)s" + format))
    except ImportError:
        handler.setFormatter(logging.Formatter(format))

    root = logging.getLogger()
    root.setLevel(level)
    if _handler is not None:
        root.removeHandler(_handler)
    root.addHandler(handler)
    _handler = handler


class CommandError(click.ClickException):
    """An ArenError on its way out, keeping its exit code."""

    def __init__(self, error):
        if isinstance(error, ConfigError):
            message = "Invalid configuration:\n" + "\n".join(
                "  - " + problem for problem in error.problems)
        else:
            message = str(error)
        super(CommandError, self).__init__(message)
        self.exit_code = error.exit_code


class ArenGroup(click.Group):
    def invoke(self, ctx):
        try:
            return super(ArenGroup, self).invoke(ctx)
        except click.UsageError as e:
            e.exit_code = 1
            raise
        except ArenError as e:
            raise CommandError(e)


def main():
    try:
        cli(standalone_mode=False)
    except click.UsageError as e:
        e.show()
        sys.exit(1)
    except click.ClickException as e:
        e.show()
        sys.exit(e.exit_code)
    except click.Abort as e:
        sys.exit(e)


@click.group(cls=ArenGroup)
@click.option("--verbose", "-v", default=False, is_flag=True)
@click.option("--debug", "-d", default=False, is_flag=True)
@click.version_option(package_name="aren-vqvae")
def cli(verbose, debug):
    """Attentive VQ-VAE: train, evaluate and restore images."""
    if debug:
        set_up_logging(logging.INFO)
        logging.getLogger("arenvq").setLevel(logging.DEBUG)
    elif verbose:
        set_up_logging(logging.INFO)
    else:
        set_up_logging(logging.WARNING)


import arenvq.cli.corrupt
import arenvq.cli.evaluate
import arenvq.cli.inspect
import arenvq.cli.restore
import arenvq.cli.train

add_command_group(corrupt)
add_command_group(evaluate)
add_command_group(inspect)
add_command_group(restore)
add_command_group(train)

if __name__ == '__main__':
    cli()
