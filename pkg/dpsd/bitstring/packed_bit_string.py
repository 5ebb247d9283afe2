# Copyright (c) 2026, the dpsd authors
import typing
import numpy as np


# Number of set bits in every possible byte, for XOR-popcount distances over packed payloads
POPCOUNT_TABLE = np.array([bin(value).count('1') for value in range(256)], dtype=np.uint8)


class BitStringError(ValueError):
    pass


class EmptyStringError(BitStringError):
    def __init__(self):
        super(EmptyStringError, self).__init__("Cannot parse an empty bit string")


class InvalidCharacterError(BitStringError):
    def __init__(self, position: int, character: str):
        super(InvalidCharacterError, self).__init__(
            f"Invalid character {character!r} at position {position}, expected '0' or '1'")
        self.position = position
        self.character = character


class LengthMismatchError(BitStringError):
    def __init__(self, length_a: int, length_b: int):
        super(LengthMismatchError, self).__init__(f"Bit strings have different lengths ({length_a} != {length_b})")
        self.length_a = length_a
        self.length_b = length_b


class PackedBitString:
    """
    An immutable binary string, packed 8 bits to a byte.
    Bits are least-significant-bit first within each byte, bytes in ascending position order,
    so the payload is bit-exact across platforms.
    Positions in the public API are 1-indexed (p in [1, length]).
    """

    __slots__ = ('_length', '_payload')

    def __init__(self, length: int, payload: np.ndarray):
        length = int(length)
        payload = np.asarray(payload, dtype=np.uint8)
        if length < 0:
            raise BitStringError(f"Length must be non-negative, got {length}")
        if payload.ndim != 1 or payload.shape[0] != (length + 7) // 8:
            raise BitStringError(f"Payload of {payload.shape} bytes does not hold exactly {length} bits")
        spare_bits = 8 * payload.shape[0] - length
        if spare_bits > 0 and int(payload[-1]) >> (8 - spare_bits) != 0:
            # Trailing bits must be zero, or equality and hashing would depend on garbage
            payload = payload.copy()
            payload[-1] &= np.uint8((1 << (8 - spare_bits)) - 1)
        payload = payload.copy() if payload.flags.writeable else payload
        payload.flags.writeable = False
        self._length = length
        self._payload = payload

    @classmethod
    def from_bits(cls, bits: typing.Union[np.ndarray, typing.Sequence[int]]) -> 'PackedBitString':
        """
        Pack a sequence of 0/1 values
        :param bits: Values, one per position. Anything nonzero counts as a 1.
        :return:
        """
        bits = np.asarray(bits).astype(bool).astype(np.uint8)
        return cls(bits.shape[0], np.packbits(bits, bitorder='little'))

    @property
    def length(self) -> int:
        return self._length

    @property
    def payload(self) -> np.ndarray:
        return self._payload

    def __len__(self):
        return self._length

    def get(self, position: int) -> int:
        """
        Get the symbol at a 1-indexed position
        :param position: The position, in [1, length]
        :return: 0 or 1
        """
        if not 1 <= position <= self._length:
            raise IndexError(f"Position {position} is outside [1, {self._length}]")
        idx = position - 1
        return (int(self._payload[idx >> 3]) >> (idx & 7)) & 1

    def to_bits(self) -> np.ndarray:
        """
        Unpack to one uint8 per position (0-indexed array)
        :return:
        """
        return np.unpackbits(self._payload, count=self._length, bitorder='little')

    def substring(self, p_l: int, p_r: int) -> 'PackedBitString':
        """
        The inclusive 1-indexed range [p_l, p_r]. An empty result is allowed when p_r = p_l - 1.
        :param p_l:
        :param p_r:
        :return:
        """
        if p_l < 1 or p_r > self._length or p_r < p_l - 1:
            raise IndexError(f"Range [{p_l}, {p_r}] is not inside [1, {self._length}]")
        return PackedBitString.from_bits(self.to_bits()[p_l - 1:p_r])

    def __eq__(self, other):
        return (isinstance(other, PackedBitString) and self._length == other._length and
                np.array_equal(self._payload, other._payload))

    def __hash__(self):
        return hash((self._length, self._payload.tobytes()))

    def __str__(self):
        return ''.join('1' if bit else '0' for bit in self.to_bits())

    def __repr__(self):
        text = str(self)
        if len(text) > 32:
            text = text[:32] + '...'
        return f"PackedBitString(length={self._length}, bits={text})"


def parse_line(text: str) -> PackedBitString:
    """
    Parse a line of '0' and '1' characters.
    :param text: The line, without its newline
    :return: The packed string
    :raises EmptyStringError: For an empty line
    :raises InvalidCharacterError: Naming the first 1-indexed position that is not a '0' or '1'
    """
    if len(text) <= 0:
        raise EmptyStringError()
    raw = np.frombuffer(text.encode('utf-8'), dtype=np.uint8)
    if raw.shape[0] != len(text):
        # Multi-byte characters, find the offending position in character terms
        for idx, char in enumerate(text):
            if char not in '01':
                raise InvalidCharacterError(idx + 1, char)
    invalid = np.nonzero((raw != ord('0')) & (raw != ord('1')))[0]
    if len(invalid) > 0:
        position = int(invalid[0])
        raise InvalidCharacterError(position + 1, text[position])
    return PackedBitString.from_bits(raw == ord('1'))


def pad_to_pow2(bit_string: PackedBitString) -> PackedBitString:
    """
    Pad with zeros up to the smallest power of two at least as long as the string.
    The dyadic tree needs node boundaries at j * n / 2^i, which only works for power-of-two n.
    :param bit_string:
    :return: The padded string, or the same object when it is already a power of two.
    """
    if bit_string.length < 1:
        raise EmptyStringError()
    target = next_pow2(bit_string.length)
    if target == bit_string.length:
        return bit_string
    bits = np.zeros(target, dtype=np.uint8)
    bits[:bit_string.length] = bit_string.to_bits()
    return PackedBitString.from_bits(bits)


def next_pow2(value: int) -> int:
    return 1 << max(int(value) - 1, 0).bit_length()


def hamming_popcount(a: PackedBitString, b: PackedBitString) -> int:
    """
    Count the positions where a and b differ, by XOR and popcount over the packed bytes.
    :param a:
    :param b:
    :return:
    """
    if a.length != b.length:
        raise LengthMismatchError(a.length, b.length)
    return int(np.sum(POPCOUNT_TABLE[np.bitwise_xor(a.payload, b.payload)], dtype=np.int64))
