import logging
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from fase.errors import FormatError

logger = logging.getLogger(__name__)


def read_pgm(path: str | Path) -> np.ndarray:
    """Read an 8-bit binary (P5) PGM as a ``uint8`` array of shape (rows, cols)."""
    path = Path(path)
    with open(path, 'rb') as fh:
        if fh.read(2) != b'P5':
            raise FormatError(f'{path}: not a binary P5 PGM file')
    try:
        with Image.open(path) as img:
            mode = img.mode
            pixels = np.array(img)
    except (UnidentifiedImageError, OSError, ValueError) as e:
        raise FormatError(f'{path}: unreadable PGM ({e})') from e
    if mode != 'L':
        raise FormatError(f'{path}: expected 8-bit grayscale, got mode {mode}')
    return pixels.astype(np.uint8)


def write_pgm(path: str | Path, values: np.ndarray) -> None:
    """Write real samples as P5 PGM, rounded and clamped to [0, 255]."""
    pixels = np.clip(np.rint(np.real(values)), 0, 255).astype(np.uint8)
    Image.fromarray(pixels).save(path, format='PPM')
    logger.debug('Wrote %dx%d PGM to %s', pixels.shape[0], pixels.shape[1], path)


def mask_from_pgm(pixels: np.ndarray) -> np.ndarray:
    """Loss flags from a mask image: pixel value 0 marks a lost sample."""
    return np.asarray(pixels) == 0


def mask_to_pgm(lost: np.ndarray) -> np.ndarray:
    return np.where(lost, 0, 255).astype(np.uint8)
