"""
Run configuration.

Values come from the packaged defaults.ini, then an optional config file, then
the AREN_OUTPUT_DIR environment variable, then command-line overrides. The
effective configuration is written next to the run's outputs and embedded in
every checkpoint, so a run can be repeated from either.
"""
import configparser
import dataclasses
import io
import logging
import os
from typing import Dict, Optional, Tuple
import numpy as np
import arenvq.validators as validators
from arenvq.degrade import DegradeSpec, KINDS
from arenvq.errors import ConfigError

logger = logging.getLogger(__name__)

DEFAULTS_PATH = os.path.join(os.path.dirname(__file__), "defaults.ini")
OUTPUT_DIR_ENV = "AREN_OUTPUT_DIR"
SECTIONS = ("model", "data", "train", "task", "output")


def _bool(raw):
    value = raw.strip().lower()
    if value in ("1", "yes", "true", "on"):
        return True
    if value in ("0", "no", "false", "off"):
        return False
    raise ValueError(raw)


def _ints(raw):
    return tuple(int(part) for part in raw.split(",") if part.strip())


def _floats(raw):
    return tuple(float(part) for part in raw.split(",") if part.strip())


def _level_filters(raw):
    """'128,128 / 128,128,128' -> {1: (128, 128), 2: (128, 128, 128)}"""
    if not raw.strip():
        return None
    return {k: _ints(part) for k, part in enumerate(raw.split("/"), start=1)}


def _join(values):
    return ",".join(str(v) for v in values)


def _yes_no(value):
    return "yes" if value else "no"


@dataclasses.dataclass
class ModelConfig:
    levels: int = 1
    latent_dim: int = 64
    codebook_size: int = 64
    attention: bool = True
    mask_input: str = "auto"
    base_filters: Tuple[int, ...] = (128, 128, 128)
    level_filters: Optional[Dict[int, Tuple[int, ...]]] = None
    decoder_filters: int = 128
    attention_max_pixels: int = 4096
    alpha: float = 0.1


@dataclasses.dataclass
class DataConfig:
    dir: str = ""
    synthetic: int = 0
    resolution: int = 32
    split: float = 0.8
    seed: int = 0


@dataclasses.dataclass
class TrainConfig:
    epochs: int = 50
    max_steps: int = 0
    save_every: int = 1
    batch_size: int = 16
    lr: float = 1e-4
    codebook_lr_scale: float = 10.0
    beta: float = 0.25
    adv_weight: float = 0.1
    seed: int = 0
    dtype: str = "float32"


@dataclasses.dataclass
class TaskConfig:
    kind: str = "none"
    mask_fraction: float = 0.5
    noise_sigma: float = 0.3
    blur_sigma: Tuple[float, ...] = (1.0, 5.0)
    blur_size: Tuple[int, ...] = (3, 15)
    seed: int = 0

    def degrade_spec(self):
        return DegradeSpec(self.kind, self.mask_fraction, self.noise_sigma,
            self.blur_sigma, self.blur_size, self.seed)


# (section, key, converter, writer) for every configuration value
FIELDS = [
    ("model", "levels", int, str),
    ("model", "latent_dim", int, str),
    ("model", "codebook_size", int, str),
    ("model", "attention", _bool, _yes_no),
    ("model", "mask_input", str, str),
    ("model", "base_filters", _ints, _join),
    ("model", "level_filters", _level_filters,
        lambda v: "" if not v else " / ".join(_join(v[k]) for k in sorted(v))),
    ("model", "decoder_filters", int, str),
    ("model", "attention_max_pixels", int, str),
    ("model", "alpha", float, repr),
    ("data", "dir", str, str),
    ("data", "synthetic", int, str),
    ("data", "resolution", int, str),
    ("data", "split", float, repr),
    ("data", "seed", int, str),
    ("train", "epochs", int, str),
    ("train", "max_steps", int, str),
    ("train", "save_every", int, str),
    ("train", "batch_size", int, str),
    ("train", "lr", float, repr),
    ("train", "codebook_lr_scale", float, repr),
    ("train", "beta", float, repr),
    ("train", "adv_weight", float, repr),
    ("train", "seed", int, str),
    ("train", "dtype", str, str),
    ("task", "kind", str, str),
    ("task", "mask_fraction", float, repr),
    ("task", "noise_sigma", float, repr),
    ("task", "blur_sigma", _floats, _join),
    ("task", "blur_size", _ints, _join),
    ("task", "seed", int, str),
]


@dataclasses.dataclass
class RunConfig:
    model: ModelConfig = dataclasses.field(default_factory=ModelConfig)
    data: DataConfig = dataclasses.field(default_factory=DataConfig)
    train: TrainConfig = dataclasses.field(default_factory=TrainConfig)
    task: TaskConfig = dataclasses.field(default_factory=TaskConfig)
    output_dir: str = "runs/default"

    @property
    def mask_input(self):
        if self.model.mask_input == "auto":
            return self.task.kind == "mask"
        return self.model.mask_input == "yes"

    @property
    def in_channels(self):
        return 4 if self.mask_input else 3

    @property
    def dtype(self):
        return np.dtype(self.train.dtype)

    def section(self, name):
        return getattr(self, name)

    def to_parser(self):
        parser = configparser.ConfigParser(interpolation=None)
        for name in SECTIONS:
            parser.add_section(name)
        for section, key, _, writer in FIELDS:
            parser.set(section, key, writer(getattr(self.section(section), key)))
        parser.set("output", "dir", self.output_dir)
        return parser

    def to_text(self):
        buffer = io.StringIO()
        self.to_parser().write(buffer)
        return buffer.getvalue()

    def problems(self, require_data=True):
        """Every problem with this configuration, in a stable order."""
        m, d, t, k = self.model, self.data, self.train, self.task
        checks = [
            validators.levels(m.levels),
            validators.positive("[model] latent_dim", m.latent_dim),
            validators.codebook_size(m.codebook_size),
            validators.choice("[model] mask_input", m.mask_input, ("auto", "yes", "no")),
            validators.positive("[model] decoder_filters", m.decoder_filters),
            validators.positive("[model] attention_max_pixels", m.attention_max_pixels),
            validators.slope(m.alpha),
            validators.resolution(d.resolution, m.levels),
            validators.split(d.split),
            validators.non_negative("[data] synthetic", d.synthetic),
            validators.non_negative("[data] seed", d.seed),
            validators.non_negative("[train] epochs", t.epochs),
            validators.non_negative("[train] max_steps", t.max_steps),
            validators.positive("[train] batch_size", t.batch_size),
            validators.positive("[train] save_every", t.save_every),
            validators.positive("[train] lr", t.lr),
            validators.positive("[train] codebook_lr_scale", t.codebook_lr_scale),
            validators.non_negative("[train] beta", t.beta),
            validators.non_negative("[train] adv_weight", t.adv_weight),
            validators.non_negative("[train] seed", t.seed),
            validators.choice("[train] dtype", t.dtype, ("float32", "float64")),
            validators.choice("[task] kind", k.kind, KINDS),
            validators.non_negative("[task] seed", k.seed),
        ]
        if t.epochs == 0 and t.max_steps == 0:
            checks.append("[train] epochs and max_steps cannot both be 0")
        if len(m.base_filters) != 3:
            checks.append("[model] base_filters needs 3 widths, got {}".format(len(m.base_filters)))
        if m.level_filters is not None and len(m.level_filters) < m.levels:
            checks.append("[model] level_filters lists {} levels but levels = {}"
                .format(len(m.level_filters), m.levels))
        if k.kind in KINDS:
            checks.extend("[task] " + p for p in k.degrade_spec().problems())
        if m.mask_input == "yes" and k.kind != "mask":
            checks.append("[model] mask_input = yes only makes sense with [task] kind = mask")
        if require_data and d.synthetic == 0:
            checks.append(validators.existing_dir("[data] dir", d.dir))
        return [problem for problem in checks if problem]

    def validate(self, require_data=True):
        problems = self.problems(require_data)
        if problems:
            raise ConfigError(problems)
        return self


def _parser_with_defaults():
    parser = configparser.ConfigParser(interpolation=None)
    with open(DEFAULTS_PATH) as f:
        parser.read_file(f)
    return parser


def _from_parser(parser):
    problems = []
    known = set((section, key) for section, key, _, _ in FIELDS)
    known.add(("output", "dir"))
    for section in parser.sections():
        if section not in SECTIONS:
            problems.append('Unknown section "[{}]"'.format(section))
            continue
        for key in parser.options(section):
            if (section, key) not in known:
                problems.append('Unknown key "{}" in [{}]'.format(key, section))

    config = RunConfig()
    for section, key, convert, _ in FIELDS:
        raw = parser.get(section, key)
        try:
            value = convert(raw)
        except ValueError:
            problems.append('[{}] {} = "{}" is not valid'.format(section, key, raw))
            continue
        setattr(config.section(section), key, value)
    config.output_dir = parser.get("output", "dir")
    if problems:
        raise ConfigError(problems)
    return config


def _apply_environment(parser):
    if os.environ.get(OUTPUT_DIR_ENV):
        parser.set("output", "dir", os.environ[OUTPUT_DIR_ENV])


def _apply_overrides(parser, overrides):
    for (section, key), value in (overrides or {}).items():
        if value is None:
            continue
        if isinstance(value, bool):
            value = _yes_no(value)
        elif isinstance(value, (tuple, list)):
            value = _join(value)
        parser.set(section, key, str(value))
        logger.debug("Override [%s] %s = %s", section, key, value)


def load_config(path=None, overrides=None):
    """
    Build the effective RunConfig.

    overrides maps (section, key) to a value (strings, numbers or booleans);
    None values are ignored so unset command-line flags can be passed through.
    """
    parser = _parser_with_defaults()
    if path is not None:
        if not os.path.isfile(path):
            raise ConfigError('Config file "{}" does not exist'.format(path))
        with open(path) as f:
            try:
                parser.read_file(f)
            except configparser.Error as e:
                raise ConfigError('Config file "{}" is malformed: {}'.format(path, e))
        logger.info('Read config "%s"', path)

    _apply_environment(parser)
    _apply_overrides(parser, overrides)
    return _from_parser(parser)


def override_config(config, overrides):
    """A copy of config with the environment and overrides applied on top."""
    parser = config.to_parser()
    _apply_environment(parser)
    _apply_overrides(parser, overrides)
    return _from_parser(parser)


def config_from_text(text):
    parser = _parser_with_defaults()
    parser.read_string(text)
    for section in parser.sections():
        if section not in SECTIONS:
            parser.remove_section(section)
    return _from_parser(parser)


def write_config(config, path):
    with open(path, "w") as f:
        config.to_parser().write(f)
    logger.info('Wrote effective config to "%s"', path)
