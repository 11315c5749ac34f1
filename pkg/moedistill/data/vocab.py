"""Whitespace tokenization and frequency-counted vocabularies."""

import collections
import json
import logging

import numpy as np

from moedistill import exception

logger = logging.getLogger(__name__)

PAD = "[PAD]"
UNK = "[UNK]"
CLS = "[CLS]"
RESERVED = (PAD, UNK, CLS)
PAD_ID, UNK_ID, CLS_ID = 0, 1, 2


def tokenize(text):
    return text.split()


class Vocab(object):
    """Token -> id map plus the training-corpus frequency of every id.

    Ids are dense in [0, V); the reserved tokens hold ids 0..2.  Tokens
    dropped by `min_freq` contribute their counts to UNK.
    """

    def __init__(self, token_to_id, frequencies):
        self.token_to_id = dict(token_to_id)
        self.id_to_token = dict((i, t) for t, i in self.token_to_id.items())
        self.frequencies = np.asarray(frequencies, dtype=np.int64)

    def __len__(self):
        return len(self.token_to_id)

    def __contains__(self, token):
        return token in self.token_to_id

    def lookup(self, token):
        return self.token_to_id.get(token, UNK_ID)

    def routing_frequencies(self):
        """Per-id frequencies with PAD zeroed, as hash balancing expects."""
        freqs = self.frequencies.astype(np.float64)
        freqs[PAD_ID] = 0.0
        return freqs

    def to_json(self):
        return dict((token, [i, int(self.frequencies[i])])
                    for token, i in self.token_to_id.items())

    @classmethod
    def from_json(cls, doc):
        freqs = np.zeros(len(doc), dtype=np.int64)
        mapping = {}
        for token, (i, freq) in doc.items():
            mapping[token] = i
            freqs[i] = freq
        return cls(mapping, freqs)

    def save(self, path):
        with open(path, "w") as f:
            json.dump(self.to_json(), f, sort_keys=True)

    @classmethod
    def load(cls, path):
        with open(path) as f:
            return cls.from_json(json.load(f))


def build_vocab(lines, min_freq=1):
    """Vocabulary of the tokens seen at least `min_freq` times in `lines`.

    Ids follow descending frequency, ties broken lexicographically.
    """
    counts = collections.Counter()
    for line in lines:
        counts.update(tokenize(line))
    if not counts:
        raise exception.EmptyCorpus()

    kept = sorted((t for t, n in counts.items()
                   if n >= min_freq and t not in RESERVED),
                  key=lambda t: (-counts[t], t))
    mapping = dict((t, i) for i, t in enumerate(RESERVED))
    freqs = [0, 0, counts.get(CLS, 0)]
    for token in kept:
        mapping[token] = len(freqs)
        freqs.append(counts[token])
    freqs[UNK_ID] = sum(n for t, n in counts.items()
                        if t not in mapping or t == UNK)
    logger.debug("Built vocabulary of %d tokens (%d below min_freq %d)",
                 len(mapping), len(counts) - len(kept), min_freq)
    return Vocab(mapping, freqs)

