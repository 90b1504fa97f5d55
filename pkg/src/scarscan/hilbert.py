"""Blockade-constrained Hilbert space of the Rydberg chain.

Site occupations are 0 (ground) or 1 (excited); the blockade forbids two
adjacent excitations, with sites L-1 and 0 adjacent under periodic
boundaries. Bitstrings are handled either as text ("0101", most-significant
site first) or as their unsigned integer encoding with site 0 as the least
significant bit, so that ``int(text, 2)`` and ``format(value, f"0{L}b")``
convert between the two.
"""

from dataclasses import dataclass, field

import numpy as np

from scarscan._validation import check_length

#: Largest supported chain length; the constrained dimension stays small
#: enough for dense diagonalization below this.
MAX_LENGTH = 20


def parse_bits(text):
    """Parse a bitstring like '0101' into (integer encoding, length)."""
    text = str(text).strip()
    if not text or any(c not in "01" for c in text):
        raise ValueError(f"not a bitstring: {text!r}")
    return int(text, 2), len(text)


def format_bits(value, length):
    """Render an integer encoding as text, most-significant site first."""
    value = int(value)
    if value < 0 or value >> length:
        raise ValueError(f"value {value} does not fit in {length} sites")
    return format(value, f"0{length}b")


def _coerce(bits, length=None):
    """Accept text or integer bitstrings, return (value, length)."""
    if isinstance(bits, str):
        return parse_bits(bits)
    value = int(bits)
    if length is None:
        raise ValueError("length is required for integer-encoded bitstrings")
    if value < 0 or value >> length:
        raise ValueError(f"value {value} does not fit in {length} sites")
    return value, int(length)


def is_valid(bits, length=None, periodic=True):
    """True iff no two (cyclically for PBC) adjacent sites are both excited."""
    value, length = _coerce(bits, length)
    if value & (value >> 1):
        return False
    if periodic and length >= 2 and (value & 1) and (value >> (length - 1)) & 1:
        return False
    return True


def violating_pairs(bits, length=None, periodic=True):
    """Adjacent site pairs that are both excited, as (site, site) tuples."""
    value, length = _coerce(bits, length)
    pairs = [
        (i, (i + 1) % length)
        for i in range(length if periodic else length - 1)
        if (value >> i) & (value >> ((i + 1) % length)) & 1
    ]
    return pairs


def hamming(a, b, length=None):
    """Number of sites at which two equal-length bitstrings differ."""
    if isinstance(a, str) or isinstance(b, str):
        if not (isinstance(a, str) and isinstance(b, str)):
            raise ValueError("mixing text and integer bitstrings is ambiguous")
        if len(a) != len(b):
            raise ValueError(f"length mismatch: {len(a)} vs {len(b)}")
        a, _ = parse_bits(a)
        b, _ = parse_bits(b)
        return int(bin(a ^ b).count("1"))
    if length is not None:
        a, _ = _coerce(a, length)
        b, _ = _coerce(b, length)
    return int(bin(int(a) ^ int(b)).count("1"))


@dataclass(frozen=True, eq=False)
class ConstrainedBasis:
    """Ordered blockade-valid configurations of a chain.

    ``states`` holds the integer encodings in ascending order, so positions
    are reproducible across runs; ``index_of`` inverts it exactly.
    """

    length: int
    periodic: bool
    states: np.ndarray
    _index: dict = field(repr=False)

    @property
    def size(self):
        return len(self.states)

    def index_of(self, bits):
        """Position of a configuration in the basis; KeyError if not valid."""
        value, length = _coerce(bits, self.length)
        if length != self.length:
            raise ValueError(f"length mismatch: basis has {self.length} sites, got {length}")
        try:
            return self._index[value]
        except KeyError:
            raise KeyError(
                f"{format_bits(value, self.length)} is not in the constrained basis"
            ) from None

    def __contains__(self, bits):
        value, _ = _coerce(bits, self.length)
        return value in self._index

    def strings(self):
        """All basis configurations as text, most-significant site first."""
        return [format_bits(int(s), self.length) for s in self.states]

    def bit_matrix(self):
        """(size, length) uint8 array of occupations; column i is site i."""
        shifts = np.arange(self.length, dtype=np.int64)
        return ((self.states[:, None] >> shifts[None, :]) & 1).astype(np.uint8)

    def write_text(self, path):
        """One bitstring per line, most-significant site first."""
        with open(path, "w", encoding="ascii") as fh:
            for s in self.strings():
                fh.write(s + "\n")


def enumerate_basis(length, periodic=True, max_length=MAX_LENGTH):
    """Enumerate all blockade-valid configurations, ascending by encoding."""
    length = check_length(length)
    if length > max_length:
        raise ValueError(f"length {length} exceeds the supported maximum {max_length}")
    values = np.arange(1 << length, dtype=np.int64)
    keep = (values & (values >> 1)) == 0
    if periodic:
        keep &= ((values & 1) & (values >> (length - 1))) == 0
    states = values[keep]
    index = {int(v): i for i, v in enumerate(states)}
    return ConstrainedBasis(length=length, periodic=bool(periodic), states=states, _index=index)
