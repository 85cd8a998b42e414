import numpy as np
import pytest

from ckdscreen import SyntheticSpec, encode_onehot, load_schema, synthesize_cohort


@pytest.fixture(scope="session")
def schema():
    return load_schema()


@pytest.fixture(scope="session")
def small_cohort(schema):
    # 284-row synthetic cohort mirroring the development class balance
    return synthesize_cohort(schema, SyntheticSpec(n_positive=112, n_negative=172, seed=42))


@pytest.fixture(scope="session")
def small_matrix(small_cohort):
    return encode_onehot(small_cohort)


@pytest.fixture()
def rng():
    return np.random.default_rng(7)
