import itertools

import pytest
from hypothesis import settings

settings.register_profile("repo", max_examples=60, deadline=None)
settings.load_profile("repo")


def data_words(alphabet, max_len, values=(0, 1, 2)):
    """All data words over ``alphabet`` x ``values`` up to ``max_len`` items."""
    for n in range(max_len + 1):
        for tags in itertools.product(alphabet, repeat=n):
            for vals in itertools.product(values, repeat=n):
                yield list(zip(tags, vals))


def tag_words(alphabet, max_len):
    for n in range(max_len + 1):
        yield from itertools.product(alphabet, repeat=n)


@pytest.fixture
def sample_dir(tmp_path):
    from streamcra.fixtures import write_samples
    write_samples(str(tmp_path))
    return tmp_path
