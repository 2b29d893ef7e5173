import numpy as np
import pytest

from masksizer.synthetic import SynthParams, write_corpus
from masksizer.training import TrainConfig

# Small, learnable corpus settings for fast tests: modest images, gentle
# nose placement, scales low enough that everything fits.
SMALL_CORPUS = dict(
    image_w=280,
    image_h=220,
    alar_mm_min=30.0,
    alar_mm_max=45.0,
    scale_min=1.5,
    scale_max=2.2,
    nose_box_frac=0.5,
    placement=0.25,
    tilt_deg=3.0,
    blob_sigma_mm=3.0,
    noise=4.0,
)

TEST_CROP = (48, 36)


def small_params(count: int, seed: int = 0, **overrides) -> SynthParams:
    kwargs = dict(SMALL_CORPUS)
    kwargs.update(overrides)
    return SynthParams(count=count, seed=seed, **kwargs)


def small_config(**overrides) -> TrainConfig:
    kwargs = dict(
        max_epochs=3,
        patience=3,
        repetitions=2,
        base_seed=0,
        n_hidden=16,
        crop_w=TEST_CROP[0],
        crop_h=TEST_CROP[1],
    )
    kwargs.update(overrides)
    return TrainConfig(**kwargs)


@pytest.fixture(scope="session")
def small_corpus(tmp_path_factory):
    """(records, manifest_path) for a 10-sample corpus shared across tests."""
    out = tmp_path_factory.mktemp("corpus")
    records, manifest = write_corpus(small_params(10, seed=21), out)
    return records, manifest


def make_pgm(width: int, height: int, values=None) -> bytes:
    if values is None:
        values = np.zeros(width * height, dtype=np.uint8)
    body = np.asarray(values, dtype=np.uint8).tobytes()
    return f"P5\n{width} {height}\n255\n".encode() + body
