"""MSB-first bit I/O with unary and exponential-Golomb codes.

Signed values map onto the unsigned code as v > 0 -> 2v - 1, v <= 0 ->
-2v, so small magnitudes of either sign stay short.
"""


class BitstreamError(ValueError):
    """Raised on reads past the end or malformed codes."""


class BitWriter:
    """Accumulates bits most-significant-first into a byte buffer."""

    def __init__(self):
        self._bytes = bytearray()
        self._acc = 0
        self._nbits = 0
        self.bit_count = 0

    def write_bit(self, bit: int) -> None:
        self._acc = (self._acc << 1) | (bit & 1)
        self._nbits += 1
        self.bit_count += 1
        if self._nbits == 8:
            self._bytes.append(self._acc)
            self._acc = 0
            self._nbits = 0

    def write_bits(self, value: int, count: int) -> None:
        for shift in range(count - 1, -1, -1):
            self.write_bit((value >> shift) & 1)

    def write_unary(self, n: int) -> None:
        """n one-bits then a terminating zero."""
        for _ in range(n):
            self.write_bit(1)
        self.write_bit(0)

    def write_ue(self, value: int) -> None:
        """Unsigned exp-Golomb: k zeros then value+1 in k+1 bits."""
        if value < 0:
            raise ValueError("write_ue needs a non-negative value")
        x = value + 1
        k = x.bit_length() - 1
        self.write_bits(0, k)
        self.write_bits(x, k + 1)

    def write_se(self, value: int) -> None:
        """Signed exp-Golomb via the zigzag sign mapping."""
        self.write_ue(signed_to_code(value))

    def getvalue(self) -> bytes:
        """Byte payload, final partial byte zero-padded."""
        out = bytearray(self._bytes)
        if self._nbits:
            out.append(self._acc << (8 - self._nbits))
        return bytes(out)


class BitReader:
    """Reads bits most-significant-first from a byte buffer."""

    def __init__(self, data: bytes, bit_offset: int = 0):
        self._data = data
        self._pos = bit_offset

    @property
    def bits_read(self) -> int:
        return self._pos

    def read_bit(self) -> int:
        byte_index = self._pos >> 3
        if byte_index >= len(self._data):
            raise BitstreamError("read past end of bitstream")
        bit = (self._data[byte_index] >> (7 - (self._pos & 7))) & 1
        self._pos += 1
        return bit

    def read_bits(self, count: int) -> int:
        value = 0
        for _ in range(count):
            value = (value << 1) | self.read_bit()
        return value

    def read_unary(self, limit: int = 1 << 20) -> int:
        n = 0
        while self.read_bit():
            n += 1
            if n > limit:
                raise BitstreamError("unary run exceeds sanity limit")
        return n

    def read_ue(self) -> int:
        k = 0
        while self.read_bit() == 0:
            k += 1
            if k > 64:
                raise BitstreamError("exp-Golomb prefix exceeds sanity limit")
        value = 1 << k
        if k:
            value |= self.read_bits(k)
        return value - 1

    def read_se(self) -> int:
        return code_to_signed(self.read_ue())


def signed_to_code(value: int) -> int:
    return 2 * value - 1 if value > 0 else -2 * value


def code_to_signed(code: int) -> int:
    return (code + 1) // 2 if code & 1 else -(code // 2)


def ue_length(value: int) -> int:
    """Coded bit length of write_ue(value)."""
    return 2 * ((value + 1).bit_length() - 1) + 1


def se_length(value: int) -> int:
    """Coded bit length of write_se(value)."""
    return ue_length(signed_to_code(value))
