"""
Checkpoint files.

Layout, all integers little-endian:

    b"ARENCKPT"               magic
    u32                       format version
    u32 + UTF-8               config text: effective INI plus a [checkpoint]
                              section with training progress
    u32                       entry count
    per entry:
      u32 + UTF-8             name
      u8                      dtype code (1 float32, 2 float64, 3 int64)
      u8                      rank
      u32 * rank              dims
      raw bytes               payload

Entry names are prefixed by what they belong to: "model/", "disc/", "usage/",
"adam.gen.m/", "adam.gen.v/", "adam.disc.m/" and "adam.disc.v/".
"""
import collections
import configparser
import io
import json
import logging
import os
import struct
import numpy as np
from arenvq.adversarial import PatchDiscriminator
from arenvq.aren import AttentiveVQVAE
from arenvq.config import config_from_text
from arenvq.errors import CheckpointError, ContractError, ConfigError
from arenvq.params import AdamState

logger = logging.getLogger(__name__)

MAGIC = b"ARENCKPT"
VERSION = 1
DTYPES = {
    1: np.dtype("<f4"),
    2: np.dtype("<f8"),
    3: np.dtype("<i8"),
}
STATE_SECTION = "checkpoint"


def _code(array):
    for code, dtype in DTYPES.items():
        if array.dtype.kind == dtype.kind and array.dtype.itemsize == dtype.itemsize:
            return code
    raise ContractError("Cannot store arrays of dtype {}".format(array.dtype))


def encode(config_text, entries):
    """Serialize config text and named arrays to bytes."""
    chunks = [MAGIC, struct.pack("<I", VERSION)]
    text = config_text.encode("utf-8")
    chunks.append(struct.pack("<I", len(text)))
    chunks.append(text)
    chunks.append(struct.pack("<I", len(entries)))
    for name, array in entries.items():
        array = np.asarray(array)
        code = _code(array)
        raw_name = name.encode("utf-8")
        chunks.append(struct.pack("<I", len(raw_name)))
        chunks.append(raw_name)
        chunks.append(struct.pack("<BB", code, array.ndim))
        chunks.append(struct.pack("<{}I".format(array.ndim), *array.shape))
        chunks.append(np.ascontiguousarray(array, dtype=DTYPES[code]).tobytes())
    return b"".join(chunks)


class _Reader(object):
    def __init__(self, data):
        self.data = data
        self.offset = 0
        self.entry = None

    def take(self, count, what):
        if self.offset + count > len(self.data):
            raise CheckpointError("Truncated checkpoint reading {}".format(what),
                self.offset, self.entry)
        chunk = self.data[self.offset:self.offset + count]
        self.offset += count
        return chunk

    def u32(self, what):
        return struct.unpack("<I", self.take(4, what))[0]

    def u8(self, what):
        return struct.unpack("<B", self.take(1, what))[0]

    def text(self, what):
        length = self.u32(what + " length")
        start = self.offset
        try:
            return self.take(length, what).decode("utf-8")
        except UnicodeDecodeError:
            raise CheckpointError("Invalid UTF-8 in {}".format(what), start, self.entry)


def decode(data):
    """(config_text, OrderedDict of arrays) from checkpoint bytes."""
    reader = _Reader(data)
    if reader.take(len(MAGIC), "magic") != MAGIC:
        raise CheckpointError("Not a checkpoint (bad magic)", 0)
    version = reader.u32("version")
    if version != VERSION:
        raise CheckpointError("Unsupported checkpoint version {} (expected {})"
            .format(version, VERSION), len(MAGIC))
    config_text = reader.text("config")
    count = reader.u32("entry count")

    entries = collections.OrderedDict()
    for i in range(count):
        reader.entry = None
        name = reader.text("name of entry {}".format(i))
        reader.entry = name
        code_offset = reader.offset
        code = reader.u8("dtype")
        if code not in DTYPES:
            raise CheckpointError("Unknown dtype code {}".format(code), code_offset, name)
        rank = reader.u8("rank")
        shape = tuple(reader.u32("dims") for _ in range(rank))
        dtype = DTYPES[code]
        size = int(np.prod(shape, dtype=np.int64)) * dtype.itemsize
        payload = reader.take(size, "payload")
        entries[name] = np.frombuffer(payload, dtype=dtype).reshape(shape).astype(
            dtype.newbyteorder("="))

    if reader.offset != len(data):
        raise CheckpointError("{} trailing bytes after the last entry"
            .format(len(data) - reader.offset), reader.offset)
    return config_text, entries


def _prefixed(prefix, arrays):
    return collections.OrderedDict(
        (prefix + name, array) for name, array in arrays.items())


def _state_text(config, model, optimizers, progress):
    parser = config.to_parser()
    parser.add_section(STATE_SECTION)
    progress = progress or {}
    for key in ("step", "epoch", "batch"):
        parser.set(STATE_SECTION, key, str(int(progress.get(key, 0))))
    for which, state in sorted((optimizers or {}).items()):
        parser.set(STATE_SECTION, "adam_{}_step".format(which), str(state.step))
    parser.set(STATE_SECTION, "codebooks_initialized",
        ",".join("1" if cb.initialized else "0" for cb in model.codebooks))
    parser.set(STATE_SECTION, "rng", json.dumps(model.rng.bit_generator.state))
    buffer = io.StringIO()
    parser.write(buffer)
    return buffer.getvalue()


def save_checkpoint(model, path, config, discriminator=None, optimizers=None, progress=None):
    """
    Write model (and optionally discriminator and Adam states) to path.

    optimizers maps "gen" / "disc" to AdamState; progress holds step, epoch
    and batch. The file is written to a temporary name and moved into place.
    """
    entries = _prefixed("model/", model.params.state())
    if discriminator is not None:
        entries.update(_prefixed("disc/", discriminator.params.state()))
    for i, codebook in enumerate(model.codebooks):
        entries["usage/codebook{}".format(i)] = codebook.usage
    for which, state in sorted((optimizers or {}).items()):
        entries.update(_prefixed("adam.{}.m/".format(which), state.m))
        entries.update(_prefixed("adam.{}.v/".format(which), state.v))

    data = encode(_state_text(config, model, optimizers, progress), entries)
    tmp = path + ".tmp"
    try:
        with open(tmp, "wb") as f:
            f.write(data)
        os.replace(tmp, path)
    except OSError as e:
        raise CheckpointError('Could not write checkpoint "{}": {}'.format(path, e))
    logger.info('Saved checkpoint "%s" (%d entries, %d bytes)', path, len(entries), len(data))


class Checkpoint(object):
    """A decoded checkpoint: config, training progress and named arrays."""

    def __init__(self, config, state, entries, path=None):
        self.config = config
        self.state = state
        self.entries = entries
        self.path = path

    def __repr__(self):
        return 'Checkpoint("{}", step={}, entries={})'.format(
            self.path, self.step, len(self.entries))

    @property
    def step(self):
        return int(self.state.get("step", 0))

    @property
    def epoch(self):
        return int(self.state.get("epoch", 0))

    @property
    def batch(self):
        return int(self.state.get("batch", 0))

    def section(self, prefix):
        return collections.OrderedDict(
            (name[len(prefix):], array) for name, array in self.entries.items()
            if name.startswith(prefix))

    def _load(self, store, prefix):
        arrays = self.section(prefix)
        try:
            store.load_state(arrays)
        except ContractError as e:
            raise CheckpointError('Checkpoint "{}" does not match its config: {}'
                .format(self.path, e))
        extra = [name for name in arrays if name not in store]
        if extra:
            raise CheckpointError('Checkpoint "{}" has unknown entries: {}'
                .format(self.path, ", ".join(prefix + n for n in extra)))

    def build_model(self):
        model = AttentiveVQVAE.from_run_config(self.config)
        self._load(model.params, "model/")
        initialized = self.state.get("codebooks_initialized", "")
        flags = [flag == "1" for flag in initialized.split(",") if flag]
        for i, codebook in enumerate(model.codebooks):
            usage = self.entries.get("usage/codebook{}".format(i))
            if usage is not None:
                codebook.usage[:] = usage
            codebook.initialized = flags[i] if i < len(flags) else True
        if "rng" in self.state:
            model.rng.bit_generator.state = json.loads(self.state["rng"])
        return model

    def build_discriminator(self):
        if not self.section("disc/"):
            return None
        discriminator = PatchDiscriminator.from_run_config(self.config)
        self._load(discriminator.params, "disc/")
        return discriminator

    def adam_state(self, which):
        state = AdamState(lr=self.config.train.lr)
        state.step = int(self.state.get("adam_{}_step".format(which), 0))
        state.m = self.section("adam.{}.m/".format(which))
        state.v = self.section("adam.{}.v/".format(which))
        return state


def load_checkpoint(path):
    try:
        with open(path, "rb") as f:
            data = f.read()
    except OSError as e:
        raise CheckpointError('Could not read checkpoint "{}": {}'.format(path, e))

    config_text, entries = decode(data)
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(config_text)
        config = config_from_text(config_text)
    except (configparser.Error, ConfigError) as e:
        raise CheckpointError('Checkpoint "{}" has an unreadable config: {}'.format(path, e))
    state = dict(parser.items(STATE_SECTION)) if parser.has_section(STATE_SECTION) else {}
    logger.info('Loaded checkpoint "%s" (%d entries, step %s)', path, len(entries),
        state.get("step", "?"))
    return Checkpoint(config, state, entries, path)
