import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))  # for `oracles`

from vigil.corpus import generate_corpus  # noqa: E402


@pytest.fixture(scope="session")
def small_corpus(tmp_path_factory) -> Path:
    """A 12-scene corpus (clean only) shared by plate/pipeline tests."""
    out = tmp_path_factory.mktemp("corpus-small")
    generate_corpus(
        out, scenes=12, seed=101, noisy_fraction=0.0, occluded_fraction=0.0,
        include_adversarial=False,
    )
    return out


@pytest.fixture(scope="session")
def mixed_corpus(tmp_path_factory) -> Path:
    """Clean + noisy + occluded + the adversarial fixture."""
    out = tmp_path_factory.mktemp("corpus-mixed")
    generate_corpus(
        out, scenes=20, seed=202, noisy_fraction=0.2, occluded_fraction=0.1,
        include_adversarial=True,
    )
    return out
