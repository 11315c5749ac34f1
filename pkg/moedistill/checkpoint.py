"""
Binary model checkpoints.

Layout (little-endian)::

    b"MOEB" | uint32 version | uint64 header length | JSON header | payload

The header is UTF-8 JSON with sorted keys: the model configuration, the
tensor manifest (name and shape, in payload order), routing, expert
provenance, free-form metadata (vocabulary reference, importance digest)
and the SHA-256 of the payload.  The payload is every tensor as float32,
row-major, in manifest order.
"""

import json
import logging
import struct

import numpy as np

from moedistill import exception
from moedistill.importance import ImportanceTable
from moedistill.model import configuration
from moedistill.model import encoder
from moedistill import routing as routing_
from moedistill import utils

logger = logging.getLogger(__name__)

MAGIC = b"MOEB"
VERSION = 1
_PREFIX = struct.Struct("<4sIQ")
_DTYPE = np.dtype("<f4")


def _encode(model, routing=None, vocab=None, importance=None,
            metadata=None):
    info = dict(model.metadata)
    info.update(metadata or {})
    if vocab is not None:
        info["vocab"] = vocab if isinstance(vocab, str) else utils.sha256(
            vocab.to_json())
    if importance is not None:
        if isinstance(importance, ImportanceTable):
            importance = importance.digest()
        info["importance"] = importance
    routing = routing or model.routing

    manifest = []
    chunks = []
    for name, param in model.named_parameters():
        manifest.append({"name": name, "shape": list(param.shape)})
        chunks.append(np.ascontiguousarray(param.data, dtype=_DTYPE).tobytes())
    payload = b"".join(chunks)

    header = {
        "config": model.config.to_dict(),
        "tensors": manifest,
        "routing": None if routing is None else routing.to_dict(),
        "provenance": None if model.provenance is None else [
            p.tolist() for p in model.provenance],
        "metadata": info,
        "payload_sha256": utils.sha256(payload),
    }
    header = json.dumps(header, sort_keys=True).encode("utf-8")
    return _PREFIX.pack(MAGIC, VERSION, len(header)) + header + payload


def save_checkpoint(model, path, routing=None, vocab=None, importance=None,
                    metadata=None):
    """Write `model` to `path`.

    `vocab` is a reference (file name) or a Vocab, stored by digest;
    `importance` an ImportanceTable or its digest.
    """
    data = _encode(model, routing, vocab, importance, metadata)
    with open(path, "wb") as f:
        f.write(data)
    logger.info("Saved checkpoint %s (%d bytes)", path, len(data))


def _decode(data):
    if len(data) < _PREFIX.size:
        raise exception.CorruptCheckpoint(reason="file too short")
    magic, version, header_len = _PREFIX.unpack_from(data)
    if magic != MAGIC:
        raise exception.BadMagic(magic=magic)
    if version != VERSION:
        raise exception.UnsupportedVersion(version=version)
    start = _PREFIX.size + header_len
    if len(data) < start:
        raise exception.CorruptCheckpoint(reason="truncated header")
    try:
        header = json.loads(data[_PREFIX.size:start].decode("utf-8"))
    except ValueError as e:
        raise exception.CorruptCheckpoint(reason="unreadable header: %s" % e)

    payload = data[start:]
    expected = sum(int(np.prod(t["shape"])) for t in header["tensors"])
    if len(payload) != expected * _DTYPE.itemsize:
        raise exception.CorruptCheckpoint(
            reason="payload holds %d bytes, manifest needs %d" % (
                len(payload), expected * _DTYPE.itemsize))
    if utils.sha256(payload) != header["payload_sha256"]:
        raise exception.CorruptCheckpoint(reason="payload digest mismatch")

    params = {}
    offset = 0
    for entry in header["tensors"]:
        shape = tuple(entry["shape"])
        size = int(np.prod(shape))
        values = np.frombuffer(payload, dtype=_DTYPE, count=size,
                               offset=offset)
        params[entry["name"]] = values.astype(np.float64).reshape(shape)
        offset += size * _DTYPE.itemsize
    return header, params


def read_checkpoint(path):
    """(model, header) stored at `path`."""
    try:
        with open(path, "rb") as f:
            data = f.read()
    except IOError:
        raise exception.PathNotFound(path=path)
    header, params = _decode(data)

    config = configuration.ModelConfig.from_dict(header["config"])
    routing = None
    if header["routing"] is not None:
        routing = routing_.RoutingTable.from_dict(header["routing"])
    model = encoder.EncoderModel(config, params, routing=routing,
                                 provenance=header["provenance"],
                                 metadata=header["metadata"])
    logger.debug("Loaded checkpoint %s: %d tensors", path,
                 len(header["tensors"]))
    return model, header


def load_checkpoint(path):
    return read_checkpoint(path)[0]
