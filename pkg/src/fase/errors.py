class FaseError(ValueError):
    """Base class for every error raised by the fase package."""


class ParameterError(FaseError):
    pass


class ShapeError(FaseError):
    pass


class MaskError(FaseError):
    pass


class FormatError(FaseError):
    """Raised for malformed dictionary, table or image files."""

    def __init__(self, message: str, atom_index: int | None = None):
        super().__init__(message)
        self.atom_index = atom_index


class DegenerateAtomError(FaseError):
    """An atom has zero weighted energy, so its projection is undefined."""

    def __init__(self, index: int):
        super().__init__(f'Atom {index} has zero weighted energy on the support area')
        self.index = index


class NoSelectableAtomError(FaseError):
    pass


class StaleTableError(FaseError):
    """Gram tables were built for a different dictionary or weighting function."""

    def __init__(self, expected: int, actual: int):
        super().__init__(
            f'Gram table provenance {actual:#018x} does not match '
            f'dictionary/weight provenance {expected:#018x}'
        )
        self.expected = expected
        self.actual = actual


class UnsupportedDictionaryError(FaseError):
    pass


class OpCountRangeError(FaseError):
    pass
