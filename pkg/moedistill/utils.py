import hashlib
import json
import os
import sys
import traceback

import numpy as np

from moedistill import exception


def import_class(import_str):
    """Returns a class from a string including module and class."""
    mod_str, _sep, class_str = import_str.rpartition('.')
    try:
        __import__(mod_str)
        return getattr(sys.modules[mod_str], class_str)
    except (ValueError, AttributeError):
        raise exception.ClassNotFound(
            class_name=class_str,
            exception=traceback.format_exception(*sys.exc_info()))


def import_module(import_str):
    """Import a module."""
    __import__(import_str)
    return sys.modules[import_str]


def rng(seed, *stream):
    """Seeded generator; `stream` selects an independent sub-stream."""
    return np.random.default_rng([seed] + list(stream))


def dumps(obj):
    """Deterministic JSON encoding (sorted keys, no whitespace)."""
    return json.dumps(obj, sort_keys=True, separators=(',', ':'))


def sha256(data):
    if not isinstance(data, bytes):
        data = dumps(data).encode('utf-8')
    return hashlib.sha256(data).hexdigest()


class JSONLinesWriter(object):
    """Appends one JSON document per line."""

    def __init__(self, path):
        self.path = path

    def write(self, record):
        with open(self.path, "a") as f:
            f.write(dumps(record))
            f.write("\n")

    def truncate(self):
        open(self.path, "w").close()

    def discard(self, key, value):
        """Drop the records whose `key` equals `value`, keeping the rest."""
        if not os.path.exists(self.path):
            return
        kept = [record for record in read_json_lines(self.path)
                if record.get(key) != value]
        with open(self.path, "w") as f:
            for record in kept:
                f.write(dumps(record))
                f.write("\n")


def read_json_lines(path):
    with open(path) as f:
        return [json.loads(line) for line in f if line.strip()]
