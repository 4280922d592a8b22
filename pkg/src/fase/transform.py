"""FFT shortcuts for DFT atoms.

For a DFT atom with frequencies (mu, eta) the weighted scalar product with a
signal is a single coefficient of the 2D DFT of ``s * w``, and the product of
two DFT atoms is again a DFT atom at the difference of their frequencies, so
every Gram entry is a coefficient of the DFT of ``w``. The forward DFT uses
the negative exponent and no normalization.
"""
import logging

import numpy as np
from scipy import fft

from fase.dictionary import Dictionary
from fase.errors import ParameterError, UnsupportedDictionaryError
from fase.fast import GramTable, ResidualProducts, _check_shapes, inverse_roots, provenance_hash
from fase.grid import WeightField, as_field

logger = logging.getLogger(__name__)

DEFAULT_FFT_THRESHOLD = 64


def prefer_fft(dictionary: Dictionary, threshold: int = DEFAULT_FFT_THRESHOLD) -> bool:
    """Whether enough DFT atoms are present for one FFT to beat direct sums."""
    return int(dictionary.tagged.sum()) >= threshold


def fft_initial_products(signal, weight: WeightField, dictionary: Dictionary) -> ResidualProducts:
    """Initial products from one FFT of ``s * w``; untagged atoms are summed directly."""
    _check_shapes(dictionary, weight)
    tagged = dictionary.tagged
    if not tagged.any():
        raise ParameterError('FFT initial products need at least one frequency-tagged atom')
    s = as_field(signal, dictionary.shape)
    sw = s * weight.values
    spectrum = fft.fft2(sw)
    R = np.empty(dictionary.size, dtype=np.complex128)
    mu, eta = dictionary.freq_tags[tagged].T
    R[tagged] = spectrum[mu, eta]
    if not tagged.all():
        R[~tagged] = dictionary.matrix[~tagged].conj() @ sw.ravel()
    logger.debug('FFT initial products for %d tagged atoms', int(tagged.sum()))
    return ResidualProducts(R)


def fft_gram_table(weight: WeightField, dictionary: Dictionary) -> GramTable:
    """Gram table of a pure DFT dictionary from one FFT of the weight field."""
    _check_shapes(dictionary, weight)
    if not dictionary.tagged.all():
        raise UnsupportedDictionaryError('FFT Gram tables require every atom to be a tagged DFT atom')
    rows, cols = dictionary.shape
    spectrum = fft.fft2(weight.values)
    # the spectrum of a real field is conjugate symmetric; enforce it exactly so C is exactly Hermitian
    negated = np.roll(spectrum[::-1, ::-1], 1, axis=(0, 1))
    spectrum = (spectrum + negated.conj()) * 0.5
    mu, eta = dictionary.freq_tags.T.astype(np.int32)
    flat = ((mu[:, None] - mu[None, :]) % rows) * cols + (eta[:, None] - eta[None, :]) % cols
    C = spectrum.ravel()[flat]
    # zero frequency difference: the diagonal is the real sum of the weights
    D = inverse_roots(C.diagonal().real.copy())
    logger.debug('Built %dx%d Gram table by FFT', dictionary.size, dictionary.size)
    return GramTable(C=C, D=D, provenance=provenance_hash(dictionary, weight))
