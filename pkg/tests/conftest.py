import numpy as np
import pytest

from corrspace.data import MultiviewDataset, ViewMatrix


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def make_dataset(arrays, splits, names=None):
    """Dataset from raw per-view arrays sharing one split labelling."""
    names = names or [f"view{i}" for i in range(len(arrays))]
    views = tuple(ViewMatrix(n, a) for n, a in zip(names, arrays))
    return MultiviewDataset(views, np.asarray(splits))


def split_labels(n_train, n_dev, n_test=0):
    return np.array(
        ["train"] * n_train + ["dev"] * n_dev + ["test"] * n_test
    )
