import numpy as np
import pytest

from comdense.data import Dataset, load_dataset
from comdense.model import (
    VARIANT_COMBINED,
    VARIANT_SHARED_ONLY,
    VARIANT_TRANSLATION_ONLY,
    ModelConfig,
    Parameters,
    init_parameters,
)
from comdense.synthetic import write_toy_dataset

ALL_VARIANTS = (VARIANT_COMBINED, VARIANT_SHARED_ONLY, VARIANT_TRANSLATION_ONLY)


@pytest.fixture(scope="session")
def toy_dir(tmp_path_factory) -> str:
    path = tmp_path_factory.mktemp("toy-data")
    write_toy_dataset(path, seed=0)
    return str(path)


@pytest.fixture(scope="session")
def toy(toy_dir) -> Dataset:
    return load_dataset(toy_dir)


def tiny_config(variant: str = VARIANT_COMBINED, **overrides) -> ModelConfig:
    """Six-entity-scale config with dropout off; criterion 1 dimensions."""
    base = dict(
        d_e=4,
        d_r=4,
        d_h=4,
        width_n=1,
        d_z=3,
        depth_common=1,
        depth_relation=1,
        variant=variant,
        input_dropout=0.0,
        hidden_dropout=0.0,
    )
    base.update(overrides)
    return ModelConfig(**base)


def randomized_params(config: ModelConfig, sizes: tuple[int, int], rng: np.random.Generator) -> Parameters:
    """Init then move every tensor (biases included) to a generic point.

    Default zero biases can leave relu pre-activations exactly at the
    kink, where the subgradient convention and central differences
    legitimately disagree; gradient checks run away from that set.
    """
    params = init_parameters(config, sizes, rng)
    for _, arr in params.named_tensors():
        arr[...] = rng.normal(scale=0.5, size=arr.shape)
    return params


def zero_params(config: ModelConfig, sizes: tuple[int, int]) -> Parameters:
    params = init_parameters(config, sizes, np.random.default_rng(0))
    for _, arr in params.named_tensors():
        arr[...] = 0.0
    return params
