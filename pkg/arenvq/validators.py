"""
Checks for individual configuration values.

Each returns a problem description, or None when the value is fine, so that a
whole configuration can be checked and every problem reported at once.
"""
import os

MAX_RESOLUTION = 256


def levels(value):
    if value not in (1, 2, 3):
        return "[model] levels must be 1, 2 or 3, got {}".format(value)


def codebook_size(value):
    if value < 2:
        return "[model] codebook_size must be at least 2, got {}".format(value)


def positive(name, value):
    if value <= 0:
        return "{} must be positive, got {}".format(name, value)


def non_negative(name, value):
    if value < 0:
        return "{} must not be negative, got {}".format(name, value)


def resolution(value, levels=None):
    if value > MAX_RESOLUTION:
        return "A resolution of {} seems a bit unreasonable for a desk run, don't you think? (max {})".format(
            value, MAX_RESOLUTION)
    if value < 4 or value % 4:
        return "[data] resolution must be a positive multiple of 4, got {}".format(value)
    if levels in (1, 2, 3) and value % (4 * 2 ** levels):
        return "[data] resolution must be a multiple of {} for {} level(s), got {}".format(
            4 * 2 ** levels, levels, value)


def split(value):
    if not 0.0 < value <= 1.0:
        return "[data] split must be in (0, 1], got {}".format(value)


def slope(value):
    if not 0.0 <= value < 1.0:
        return "[model] alpha must be in [0, 1), got {}".format(value)


def choice(name, value, choices):
    if value not in choices:
        return '{} "{}" invalid, try one of {}'.format(name, value, list(choices))


def existing_dir(name, path):
    if not path:
        return "{} must be set".format(name)
    if not os.path.isdir(path):
        return '{} "{}" does not exist'.format(name, path)
