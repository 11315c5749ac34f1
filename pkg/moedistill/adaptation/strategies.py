import numpy as np

from moedistill import adaptation


class ImportanceAdapter(adaptation.BaseAdapter):
    """Most important neurons are shared, the rest dealt round-robin."""

    name = "import"

    def order(self, ordering, rng):
        return ordering


class RandomAdapter(adaptation.BaseAdapter):
    """Ignore the scores: neurons are split in a random order."""

    name = "random"

    def order(self, ordering, rng):
        if rng is None:
            rng = np.random.default_rng(0)
        return rng.permutation(ordering)


class InverseAdapter(adaptation.BaseAdapter):
    """Least important neurons first."""

    name = "inverse"

    def order(self, ordering, rng):
        return ordering[::-1]
