"""Bit-exact MT19937, PCG32 (XSH-RR 64/32) and Philox4x32-10.

Each algorithm has a plain state dataclass and scalar step functions that
follow the reference C code line by line.  :class:`Stream` wraps a state and
adds a vectorised ``words(n)`` path used by the battery; it leaves the state
exactly where the same number of scalar calls would.
"""

from __future__ import annotations

import enum
import struct
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

MASK32 = 0xFFFFFFFF
MASK64 = 0xFFFFFFFFFFFFFFFF

# MT19937 period parameters
MT_N = 624
MT_M = 397
MT_MATRIX_A = 0x9908B0DF
MT_UPPER = 0x80000000
MT_LOWER = 0x7FFFFFFF

PCG_MULT = 6364136223846793005

PHILOX_M0 = 0xD2511F53
PHILOX_M1 = 0xCD9E8D57
PHILOX_W0 = 0x9E3779B9
PHILOX_W1 = 0xBB67AE85
PHILOX_ROUNDS = 10

STATE_FORMAT_VERSION = 1


class GeneratorKind(enum.Enum):
    MT19937 = "Mt19937"
    PCG32 = "Pcg32"
    PHILOX4X32_10 = "Philox4x32_10"

    @property
    def state_bits(self) -> int:
        return _STATE_BITS[self]

    @property
    def tag(self) -> int:
        return _TAGS[self]

    @classmethod
    def parse(cls, text: str) -> "GeneratorKind":
        key = text.strip().lower().replace("-", "").replace("_", "")
        for kind in cls:
            if key in (kind.value.lower().replace("_", ""), kind.name.lower().replace("_", "")):
                return kind
        aliases = {"mt": cls.MT19937, "mt32": cls.MT19937, "pcg": cls.PCG32,
                   "philox": cls.PHILOX4X32_10, "philox32": cls.PHILOX4X32_10,
                   "philox4x32": cls.PHILOX4X32_10}
        if key in aliases:
            return aliases[key]
        raise ValueError(f"unknown generator kind {text!r}")


_STATE_BITS = {GeneratorKind.MT19937: 19937, GeneratorKind.PCG32: 64,
               GeneratorKind.PHILOX4X32_10: 192}
_TAGS = {GeneratorKind.MT19937: 1, GeneratorKind.PCG32: 2, GeneratorKind.PHILOX4X32_10: 3}


# --------------------------------------------------------------------------
# MT19937


@dataclass
class Mt19937State:
    word_table: np.ndarray
    index: int = MT_N

    kind = GeneratorKind.MT19937

    def copy(self) -> "Mt19937State":
        return Mt19937State(self.word_table.copy(), self.index)

    def __eq__(self, other):
        if not isinstance(other, Mt19937State):
            return NotImplemented
        return self.index == other.index and np.array_equal(self.word_table, other.word_table)


def mt_seed(seed: int) -> Mt19937State:
    """``init_genrand`` from the 2002 reference code."""
    mt = [0] * MT_N
    mt[0] = seed & MASK32
    for i in range(1, MT_N):
        prev = mt[i - 1]
        mt[i] = (1812433253 * (prev ^ (prev >> 30)) + i) & MASK32
    return Mt19937State(np.array(mt, dtype=np.uint32), MT_N)


def _mt_twist(mt: np.ndarray) -> None:
    # In-place regeneration of all 624 words.  The sequential loop reads
    # mt[i+M] before it is overwritten for i < 227 and after for i >= 227,
    # so three slices reproduce it exactly.
    upper, lower = np.uint32(MT_UPPER), np.uint32(MT_LOWER)
    mag = np.uint32(MT_MATRIX_A)
    for lo, hi in ((0, 227), (227, 454), (454, 623)):
        y = (mt[lo:hi] & upper) | (mt[lo + 1:hi + 1] & lower)
        src = np.arange(lo, hi) + MT_M
        src[src >= MT_N] -= MT_N
        mt[lo:hi] = mt[src] ^ (y >> np.uint32(1)) ^ ((y & np.uint32(1)) * mag)
    y = (mt[623] & upper) | (mt[0] & lower)
    mt[623] = mt[MT_M - 1] ^ (y >> np.uint32(1)) ^ ((y & np.uint32(1)) * mag)


def _mt_temper(y):
    y = y ^ (y >> 11)
    y = y ^ ((y << 7) & 0x9D2C5680)
    y = y ^ ((y << 15) & 0xEFC60000)
    return y ^ (y >> 18)


def _mt_temper_array(y: np.ndarray) -> np.ndarray:
    y = y ^ (y >> np.uint32(11))
    y = y ^ ((y << np.uint32(7)) & np.uint32(0x9D2C5680))
    y = y ^ ((y << np.uint32(15)) & np.uint32(0xEFC60000))
    return y ^ (y >> np.uint32(18))


def _mt_twist_scalar(mt: np.ndarray) -> None:
    # Literal transcription of genrand_int32's refill loop; kept as the
    # reference the vectorised twist is tested against.
    table = [int(v) for v in mt]
    for kk in range(MT_N):
        y = (table[kk] & MT_UPPER) | (table[(kk + 1) % MT_N] & MT_LOWER)
        table[kk] = table[(kk + MT_M) % MT_N] ^ (y >> 1) ^ (MT_MATRIX_A if y & 1 else 0)
    mt[:] = table


def mt_next(state: Mt19937State) -> int:
    if state.index >= MT_N:
        _mt_twist(state.word_table)
        state.index = 0
    y = int(state.word_table[state.index])
    state.index += 1
    return _mt_temper(y)


def _mt_words(state: Mt19937State, n: int) -> np.ndarray:
    out = np.empty(n, dtype=np.uint32)
    pos = 0
    while pos < n:
        if state.index >= MT_N:
            _mt_twist(state.word_table)
            state.index = 0
        take = min(MT_N - state.index, n - pos)
        out[pos:pos + take] = state.word_table[state.index:state.index + take]
        state.index += take
        pos += take
    return _mt_temper_array(out)


# --------------------------------------------------------------------------
# PCG32


@dataclass
class Pcg32State:
    state: int
    increment: int

    kind = GeneratorKind.PCG32

    def __post_init__(self):
        if self.increment & 1 == 0:
            raise ValueError("PCG32 increment must be odd")

    def copy(self) -> "Pcg32State":
        return Pcg32State(self.state, self.increment)


def pcg32_seed(initstate: int, initseq: int) -> Pcg32State:
    """``pcg32_srandom_r`` from the minimal C implementation."""
    inc = ((initseq << 1) | 1) & MASK64
    s = inc  # 0 * mult + inc
    s = (s + (initstate & MASK64)) & MASK64
    s = (s * PCG_MULT + inc) & MASK64
    return Pcg32State(s, inc)


def _pcg_output(old: int) -> int:
    xorshifted = (((old >> 18) ^ old) >> 27) & MASK32
    rot = old >> 59
    return ((xorshifted >> rot) | (xorshifted << ((-rot) & 31))) & MASK32


def pcg32_next(state: Pcg32State) -> int:
    old = state.state
    state.state = (old * PCG_MULT + state.increment) & MASK64
    return _pcg_output(old)


def _lcg_jump(delta: int, mult: int = PCG_MULT):
    """Coefficients (A, C) with ``A*x + C*inc`` == ``delta`` LCG steps from x."""
    acc_mult, acc_plus = 1, 0
    cur_mult, cur_plus = mult, 1
    delta &= MASK64
    while delta:
        if delta & 1:
            acc_mult = (acc_mult * cur_mult) & MASK64
            acc_plus = (acc_plus * cur_mult + cur_plus) & MASK64
        cur_plus = ((cur_mult + 1) * cur_plus) & MASK64
        cur_mult = (cur_mult * cur_mult) & MASK64
        delta >>= 1
    return acc_mult, acc_plus


def pcg32_advance(state: Pcg32State, delta: int) -> Pcg32State:
    """Jump ``delta`` LCG steps ahead in O(log delta); mutates and returns ``state``."""
    a, c = _lcg_jump(delta)
    state.state = (a * state.state + c * state.increment) & MASK64
    return state


_PCG_BLOCK = 1 << 16


@lru_cache(maxsize=None)
def _pcg_tables():
    # For j < _PCG_BLOCK: state_j = A[j]*s0 + C[j]*inc (mod 2**64).
    a = np.empty(_PCG_BLOCK, dtype=np.uint64)
    c = np.empty(_PCG_BLOCK, dtype=np.uint64)
    am, cm = 1, 0
    for j in range(_PCG_BLOCK):
        a[j] = am
        c[j] = cm
        cm = (cm * PCG_MULT + 1) & MASK64
        am = (am * PCG_MULT) & MASK64
    return a, c


def _pcg_words(state: Pcg32State, n: int) -> np.ndarray:
    a_tab, c_tab = _pcg_tables()
    out = np.empty(n, dtype=np.uint32)
    pos = 0
    while pos < n:
        take = min(_PCG_BLOCK, n - pos)
        old = a_tab[:take] * np.uint64(state.state) + c_tab[:take] * np.uint64(state.increment)
        xorshifted = (((old >> np.uint64(18)) ^ old) >> np.uint64(27)).astype(np.uint32)
        rot = (old >> np.uint64(59)).astype(np.uint32)
        out[pos:pos + take] = (xorshifted >> rot) | (xorshifted << ((np.uint32(32) - rot) & np.uint32(31)))
        pcg32_advance(state, take)
        pos += take
    return out


# --------------------------------------------------------------------------
# Philox4x32-10


def philox_block(counter, key) -> tuple[int, int, int, int]:
    """Philox4x32 with 10 rounds; pure function of ``counter`` and ``key``."""
    c0, c1, c2, c3 = (int(v) & MASK32 for v in counter)
    k0, k1 = (int(v) & MASK32 for v in key)
    for r in range(PHILOX_ROUNDS):
        if r:
            k0 = (k0 + PHILOX_W0) & MASK32
            k1 = (k1 + PHILOX_W1) & MASK32
        p0 = PHILOX_M0 * c0
        p1 = PHILOX_M1 * c2
        c0, c1, c2, c3 = ((p1 >> 32) ^ c1 ^ k0, p1 & MASK32,
                          (p0 >> 32) ^ c3 ^ k1, p0 & MASK32)
    return c0, c1, c2, c3


def _philox_blocks(base_counter: int, count: int, key) -> np.ndarray:
    """Blocks at counters base..base+count-1 as a (count, 4) uint32 array."""
    j = np.arange(count, dtype=np.uint64)
    base_lo = np.uint64(base_counter & MASK64)
    base_hi = (base_counter >> 64) & MASK64
    lo = base_lo + j
    hi = np.full(count, base_hi, dtype=np.uint64) + (lo < base_lo).astype(np.uint64)
    m32 = np.uint64(MASK32)
    s32 = np.uint64(32)
    c0, c1 = lo & m32, lo >> s32
    c2, c3 = hi & m32, hi >> s32
    k0, k1 = int(key[0]) & MASK32, int(key[1]) & MASK32
    m0, m1 = np.uint64(PHILOX_M0), np.uint64(PHILOX_M1)
    for r in range(PHILOX_ROUNDS):
        if r:
            k0 = (k0 + PHILOX_W0) & MASK32
            k1 = (k1 + PHILOX_W1) & MASK32
        p0 = c0 * m0
        p1 = c2 * m1
        c0, c1, c2, c3 = ((p1 >> s32) ^ c1 ^ np.uint64(k0), p1 & m32,
                          (p0 >> s32) ^ c3 ^ np.uint64(k1), p0 & m32)
    return np.stack([c0, c1, c2, c3], axis=1).astype(np.uint32)


def _counter_int(words) -> int:
    return sum((int(w) & MASK32) << (32 * i) for i, w in enumerate(words))


def _counter_words(value: int) -> list[int]:
    value &= (1 << 128) - 1
    return [(value >> (32 * i)) & MASK32 for i in range(4)]


@dataclass
class PhiloxState:
    counter: list[int] = field(default_factory=lambda: [0, 0, 0, 0])
    key: list[int] = field(default_factory=lambda: [0, 0])
    block: list[int] = field(default_factory=lambda: [0, 0, 0, 0])
    block_pos: int = 4

    kind = GeneratorKind.PHILOX4X32_10

    def copy(self) -> "PhiloxState":
        return PhiloxState(list(self.counter), list(self.key), list(self.block), self.block_pos)


def philox_increment(counter: list[int]) -> list[int]:
    return _counter_words(_counter_int(counter) + 1)


def philox_next(state: PhiloxState) -> int:
    if state.block_pos >= 4:
        state.block = list(philox_block(state.counter, state.key))
        state.counter = philox_increment(state.counter)
        state.block_pos = 0
    word = state.block[state.block_pos]
    state.block_pos += 1
    return word


def _philox_words(state: PhiloxState, n: int) -> np.ndarray:
    out = np.empty(n, dtype=np.uint32)
    pos = 0
    while pos < n and state.block_pos < 4:
        out[pos] = state.block[state.block_pos]
        state.block_pos += 1
        pos += 1
    chunk = 1 << 18
    while pos < n:
        nblocks = min(chunk, -(-(n - pos) // 4))
        base = _counter_int(state.counter)
        flat = _philox_blocks(base, nblocks, state.key).ravel()
        take = min(len(flat), n - pos)
        out[pos:pos + take] = flat[:take]
        pos += take
        state.counter = _counter_words(base + nblocks)
        state.block = [int(v) for v in flat[-4:]]
        state.block_pos = 4 - (len(flat) - take)
    return out


# --------------------------------------------------------------------------
# seeding and unified stream


def splitmix64(x: int) -> tuple[int, int]:
    """One splitmix64 step: returns (next_state, output)."""
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return x, z ^ (z >> 31)


def splitmix64_expand(seed: int, count: int) -> list[int]:
    out = []
    x = seed & MASK64
    for _ in range(count):
        x, z = splitmix64(x)
        out.append(z)
    return out


GeneratorState = Mt19937State | Pcg32State | PhiloxState


def stream_from_seed(kind: GeneratorKind, seed: int) -> GeneratorState:
    """Initialise ``kind`` from a single 64-bit seed.

    MT19937 takes the low 32 bits through ``init_genrand``.  PCG32 and Philox
    expand the seed with splitmix64: PCG32 gets (initstate, initseq) from the
    first two outputs, Philox gets its key from the first output with the
    counter at zero.
    """
    seed &= MASK64
    if kind is GeneratorKind.MT19937:
        return mt_seed(seed & MASK32)
    if kind is GeneratorKind.PCG32:
        s1, s2 = splitmix64_expand(seed, 2)
        return pcg32_seed(s1, s2)
    if kind is GeneratorKind.PHILOX4X32_10:
        (s1,) = splitmix64_expand(seed, 1)
        return PhiloxState(key=[s1 & MASK32, s1 >> 32])
    raise ValueError(f"unknown generator kind {kind!r}")


def next_word(state: GeneratorState) -> int:
    if isinstance(state, Mt19937State):
        return mt_next(state)
    if isinstance(state, Pcg32State):
        return pcg32_next(state)
    if isinstance(state, PhiloxState):
        return philox_next(state)
    raise TypeError(f"not a generator state: {type(state).__name__}")


def generate_words(state: GeneratorState, n: int) -> np.ndarray:
    """``n`` successive 32-bit outputs as a uint32 array (vectorised)."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    if isinstance(state, Mt19937State):
        return _mt_words(state, n)
    if isinstance(state, Pcg32State):
        return _pcg_words(state, n)
    if isinstance(state, PhiloxState):
        return _philox_words(state, n)
    raise TypeError(f"not a generator state: {type(state).__name__}")


def to_unit_interval(word):
    """word / 2**32; works on ints and uint32 arrays."""
    if isinstance(word, np.ndarray):
        return word.astype(np.float64) * (1.0 / 4294967296.0)
    return (int(word) & MASK32) / 4294967296.0


class Stream:
    """A source of 32-bit words backed by a generator state."""

    def __init__(self, state: GeneratorState):
        self.state = state
        self.consumed = 0

    @classmethod
    def from_seed(cls, kind: GeneratorKind, seed: int) -> "Stream":
        return cls(stream_from_seed(kind, seed))

    def words(self, n: int) -> np.ndarray:
        out = generate_words(self.state, n)
        self.consumed += n
        return out

    def next_u32(self) -> int:
        self.consumed += 1
        return next_word(self.state)

    def uniforms(self, n: int) -> np.ndarray:
        return to_unit_interval(self.words(n))


class ArrayStream:
    """Replays a fixed word array; raises once it runs dry."""

    def __init__(self, words):
        self._words = np.asarray(words, dtype=np.uint32)
        self.consumed = 0

    @classmethod
    def from_uniforms(cls, values) -> "ArrayStream":
        u = np.asarray(values, dtype=np.float64)
        if np.any((u < 0) | (u >= 1)):
            raise ValueError("uniforms must lie in [0, 1)")
        return cls(np.floor(u * 4294967296.0).astype(np.uint64).astype(np.uint32))

    def words(self, n: int) -> np.ndarray:
        if self.consumed + n > len(self._words):
            raise EOFError(f"array stream exhausted ({len(self._words)} words)")
        out = self._words[self.consumed:self.consumed + n]
        self.consumed += n
        return out

    def next_u32(self) -> int:
        return int(self.words(1)[0])

    def uniforms(self, n: int) -> np.ndarray:
        return to_unit_interval(self.words(n))


# --------------------------------------------------------------------------
# serialization: [version, kind tag, little-endian words in field order]


def serialize_state(state: GeneratorState) -> bytes:
    head = bytes([STATE_FORMAT_VERSION, state.kind.tag])
    if isinstance(state, Mt19937State):
        return head + state.word_table.astype("<u4").tobytes() + struct.pack("<I", state.index)
    if isinstance(state, Pcg32State):
        return head + struct.pack("<QQ", state.state, state.increment)
    if isinstance(state, PhiloxState):
        return head + struct.pack("<4I2I4II", *state.counter, *state.key, *state.block, state.block_pos)
    raise TypeError(f"not a generator state: {type(state).__name__}")


def deserialize_state(blob: bytes) -> GeneratorState:
    if len(blob) < 2:
        raise ValueError("state blob too short")
    version, tag = blob[0], blob[1]
    if version != STATE_FORMAT_VERSION:
        raise ValueError(f"unsupported state format version {version}")
    body = blob[2:]
    if tag == GeneratorKind.MT19937.tag:
        if len(body) != 4 * MT_N + 4:
            raise ValueError("bad MT19937 state length")
        table = np.frombuffer(body[:4 * MT_N], dtype="<u4").astype(np.uint32)
        (index,) = struct.unpack("<I", body[4 * MT_N:])
        if index > MT_N:
            raise ValueError("MT19937 index out of range")
        return Mt19937State(table, index)
    if tag == GeneratorKind.PCG32.tag:
        if len(body) != 16:
            raise ValueError("bad PCG32 state length")
        return Pcg32State(*struct.unpack("<QQ", body))
    if tag == GeneratorKind.PHILOX4X32_10.tag:
        if len(body) != 44:
            raise ValueError("bad Philox state length")
        v = struct.unpack("<4I2I4II", body)
        if v[10] > 4:
            raise ValueError("Philox block_pos out of range")
        return PhiloxState(list(v[0:4]), list(v[4:6]), list(v[6:10]), v[10])
    raise ValueError(f"unknown kind tag {tag}")
