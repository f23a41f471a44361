import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from l2h_corpus import generate_corpus  # noqa: E402

CORPUS_CONFIG = {
    "geometry": {"scanline_count": 32, "axial_samples": 128},
    "out_height": 96,
    "out_width": 128,
    "samples": 8,
    "seed": 123,
    "train_frac": 0.75,
}


@pytest.fixture(scope="session")
def corpus(tmp_path_factory):
    root = tmp_path_factory.mktemp("corpus")
    return generate_corpus(str(root), CORPUS_CONFIG)


@pytest.fixture
def smoke_config():
    from l2htrainer.config import TranslatorConfig
    return TranslatorConfig(variant="MSA", generator_depth=4, base_channels=8,
                            patch_size=32, batch_size=2, max_iterations=10,
                            checkpoint_every=5, seed=7)
