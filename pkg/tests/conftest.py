import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from english_corpus import generate_corpus  # noqa: E402

from vocab_toolkit.bpe import train_bpe  # noqa: E402
from vocab_toolkit.presets import (  # noqa: E402
    DERIVED_GAMMA,
    PAPER_FERTILITY,
    PAPER_LAWS,
    PAPER_PARAMETRIC,
)


@pytest.fixture(scope="session")
def paper_fert():
    return PAPER_FERTILITY


@pytest.fixture(scope="session")
def paper_ploss():
    return PAPER_PARAMETRIC


@pytest.fixture(scope="session")
def paper_laws():
    return PAPER_LAWS


@pytest.fixture(scope="session")
def derived_gamma():
    return DERIVED_GAMMA


@pytest.fixture(scope="session")
def english_text():
    """Deterministic >= 1MB English-like corpus."""
    return generate_corpus(1_200_000, seed=0)


@pytest.fixture(scope="session")
def english_table(english_text):
    """One BPE training run at the largest vocabulary the sweep needs."""
    return train_bpe(english_text.encode("utf-8"), 8192)


@pytest.fixture(scope="session")
def small_table():
    """Tiny tokenizer for cheap encode/decode tests."""
    corpus = (b"the cat sat on the mat " * 200) + (b"a stitch in time saves nine " * 150)
    return train_bpe(corpus, 256 + 80)
