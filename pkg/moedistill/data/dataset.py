"""Encoded examples, padded batches and TSV ingestion."""

import io
import logging

import numpy as np

from moedistill.data import vocab as vocab_
from moedistill import exception

logger = logging.getLogger(__name__)


class Example(object):
    def __init__(self, token_ids, label, mask=None):
        self.token_ids = np.asarray(token_ids, dtype=np.int64)
        if mask is None:
            mask = np.ones(self.token_ids.shape)
        self.mask = np.asarray(mask, dtype=np.float64)
        self.label = int(label)

    def __len__(self):
        return int(self.mask.sum())


class Batch(object):
    def __init__(self, token_ids, mask, labels):
        self.token_ids = token_ids
        self.mask = mask
        self.labels = labels

    def __len__(self):
        return len(self.labels)


def encode(text, vocab, max_len, label=0, pad=False):
    """Example holding [CLS] + the ids of `text`, truncated to `max_len`.

    With `pad` the ids are PAD-filled up to `max_len`.
    """
    ids = [vocab_.CLS_ID] + [vocab.lookup(t) for t in vocab_.tokenize(text)]
    ids = ids[:max_len]
    mask = [1.0] * len(ids)
    if pad:
        mask += [0.0] * (max_len - len(ids))
        ids += [vocab_.PAD_ID] * (max_len - len(ids))
    return Example(ids, label, mask)


def decode(token_ids, vocab, skip_special=True):
    tokens = [vocab.id_to_token[int(i)] for i in token_ids]
    if skip_special:
        tokens = [t for t in tokens if t not in vocab_.RESERVED]
    return " ".join(tokens)


def collate(examples):
    """Pad `examples` to the longest real length among them."""
    width = max(len(e) for e in examples)
    token_ids = np.full((len(examples), width), vocab_.PAD_ID, np.int64)
    mask = np.zeros((len(examples), width))
    for row, e in enumerate(examples):
        n = len(e)
        token_ids[row, :n] = e.token_ids[e.mask > 0][:n]
        mask[row, :n] = 1.0
    labels = np.asarray([e.label for e in examples], dtype=np.int64)
    return Batch(token_ids, mask, labels)


class Dataset(object):
    """Ordered, immutable collection of encoded examples."""

    def __init__(self, examples, num_labels, labels=None):
        self.examples = list(examples)
        self.num_labels = num_labels
        self.labels = labels

    def __len__(self):
        return len(self.examples)

    def __iter__(self):
        return iter(self.examples)

    def __getitem__(self, index):
        return self.examples[index]

    def subset(self, indices):
        return Dataset([self.examples[i] for i in indices], self.num_labels,
                       self.labels)

    def batches(self, batch_size, rng=None):
        """Padded batches; shuffled with `rng` when given."""
        order = np.arange(len(self.examples))
        if rng is not None:
            order = rng.permutation(order)
        for start in range(0, len(order), batch_size):
            yield collate([self.examples[i]
                           for i in order[start:start + batch_size]])


class TextDataset(object):
    """Raw (text, label) records as read from a TSV file."""

    def __init__(self, records, labels=None):
        self.records = list(records)
        if labels is None:
            labels = sorted(set(label for _, label in self.records))
        self.labels = list(labels)

    def __len__(self):
        return len(self.records)

    def texts(self):
        return [text for text, _ in self.records]

    def encode(self, vocab, max_len, labels=None):
        """Encode against `vocab`, mapping labels through `labels`.

        `labels` defaults to this dataset's own (sorted) label set; passing
        the training labels freezes the mapping for evaluation data.
        """
        labels = self.labels if labels is None else list(labels)
        label_ids = dict((label, i) for i, label in enumerate(labels))
        examples = []
        for text, label in self.records:
            if label not in label_ids:
                raise exception.UnknownLabel(label=label)
            examples.append(encode(text, vocab, max_len, label_ids[label]))
        return Dataset(examples, len(labels), labels)


def load_tsv(path, has_header=False):
    """Parse one ``text<TAB>label`` example per line (LF or CRLF)."""
    records = []
    with io.open(path, "rb") as f:
        lines = f.read().splitlines()
    for number, raw in enumerate(lines, 1):
        try:
            line = raw.decode("utf-8")
        except UnicodeDecodeError:
            raise exception.MalformedLine(path=path, line=number)
        if has_header and number == 1:
            continue
        if not line.strip():
            continue
        fields = line.split("\t")
        if len(fields) != 2 or not fields[1].strip():
            raise exception.MalformedLine(path=path, line=number)
        records.append((fields[0], fields[1].strip()))
    logger.info("Loaded %d examples from %s", len(records), path)
    return TextDataset(records)
