import numpy as np
import pytest

from fase.dictionary import Dictionary, NO_TAG, generate_dictionary
from fase.grid import ExtrapConfig, LossMask, WeightField


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope='session')
def dct8():
    return generate_dictionary('dct', 8, 8)


@pytest.fixture(scope='session')
def dft4():
    return generate_dictionary('dft', 4, 4)


@pytest.fixture
def central_loss8():
    return LossMask.central_block(8, 8, 4, 4)


@pytest.fixture
def unit_weight():
    def make(rows, cols):
        return WeightField(np.ones((rows, cols)))
    return make


def custom_dictionary(atoms) -> Dictionary:
    atoms = np.asarray(atoms, dtype=np.complex128)
    return Dictionary(atoms=atoms, families=('custom',) * len(atoms), freq_tags=np.full((len(atoms), 2), NO_TAG))


def config(**kwargs) -> ExtrapConfig:
    return ExtrapConfig.build(**kwargs)
