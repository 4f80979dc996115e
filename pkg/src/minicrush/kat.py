"""Known-answer vectors and word-stream comparison.

Golden vector files are plain text, one vector per line::

    <kind> <name>=<value> ... offset=<n> : <hex word> <hex word> ...

Parameters per kind:

* ``Mt19937``: ``seed`` (``init_genrand``)
* ``Pcg32``: ``initstate``, ``initseq`` (``pcg32_srandom``)
* ``Philox4x32_10``: ``counter`` as four comma-separated 32-bit words
  (least significant first) and ``key`` as two

Integers may be decimal or ``0x`` hex.  ``#`` starts a comment.

Raw dumps are bare little-endian 32-bit words with no header.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .generators import (
    GeneratorKind,
    Pcg32State,
    PhiloxState,
    generate_words,
    mt_seed,
    pcg32_advance,
    pcg32_seed,
)

_PARAMS = {
    GeneratorKind.MT19937: ("seed",),
    GeneratorKind.PCG32: ("initstate", "initseq"),
    GeneratorKind.PHILOX4X32_10: ("counter", "key"),
}
_SKIP_CHUNK = 1 << 20


class KatFormatError(ValueError):
    pass


@dataclass(frozen=True)
class KatVector:
    kind: GeneratorKind
    params: tuple[tuple[str, object], ...]
    offset: int
    expected_words: tuple[int, ...]

    def __post_init__(self):
        if not self.expected_words:
            raise ValueError("a known-answer vector needs at least one expected word")
        if self.offset < 0:
            raise ValueError("offset must be >= 0")
        names = tuple(n for n, _ in self.params)
        if sorted(names) != sorted(_PARAMS[self.kind]):
            raise ValueError(f"{self.kind.value} vectors take parameters {_PARAMS[self.kind]}, got {names}")

    @property
    def param_dict(self) -> dict:
        return dict(self.params)

    def describe(self) -> str:
        parts = []
        for name, value in self.params:
            if isinstance(value, tuple):
                parts.append(f"{name}=" + ",".join(f"0x{w:08x}" for w in value))
            else:
                parts.append(f"{name}={value}")
        return f"{self.kind.value} {' '.join(parts)} offset={self.offset}"

    def to_line(self) -> str:
        return self.describe() + " : " + " ".join(f"{w:08x}" for w in self.expected_words)


@dataclass(frozen=True)
class KatResult:
    vector: KatVector
    passed: bool
    index: int | None = None  # word index relative to the vector's offset
    expected: int | None = None
    actual: int | None = None

    def __str__(self) -> str:
        if self.passed:
            return f"PASS {self.vector.describe()} ({len(self.vector.expected_words)} words)"
        return (f"FAIL {self.vector.describe()}: word {self.index} "
                f"expected {self.expected:08x} got {self.actual:08x}")


def initial_state(vector: KatVector):
    p = vector.param_dict
    if vector.kind is GeneratorKind.MT19937:
        return mt_seed(p["seed"])
    if vector.kind is GeneratorKind.PCG32:
        return pcg32_seed(p["initstate"], p["initseq"])
    if vector.kind is GeneratorKind.PHILOX4X32_10:
        return PhiloxState(counter=list(p["counter"]), key=list(p["key"]))
    raise ValueError(f"unknown generator kind {vector.kind!r}")


def _skip(state, n: int) -> None:
    if n and isinstance(state, Pcg32State):
        pcg32_advance(state, n)
        return
    while n > 0:
        step = min(n, _SKIP_CHUNK)
        generate_words(state, step)
        n -= step


def verify_kat(vector: KatVector) -> KatResult:
    state = initial_state(vector)
    _skip(state, vector.offset)
    got = generate_words(state, len(vector.expected_words))
    for i, (want, have) in enumerate(zip(vector.expected_words, got.tolist())):
        if want != have:
            return KatResult(vector, False, i, want, have)
    return KatResult(vector, True)


# --------------------------------------------------------------------------
# golden file parsing


def _int(text: str) -> int:
    return int(text, 0)


def _parse_param(kind: GeneratorKind, name: str, value: str):
    if kind is GeneratorKind.PHILOX4X32_10:
        words = tuple(_int(v) for v in value.split(","))
        if len(words) != (4 if name == "counter" else 2) or any(not 0 <= w < 2**32 for w in words):
            raise ValueError(f"bad Philox {name} {value!r}")
        return words
    return _int(value)


def parse_kat_line(line: str) -> KatVector:
    head, sep, tail = line.partition(":")
    if not sep:
        raise ValueError("missing ':' before the expected words")
    fields = head.split()
    if not fields:
        raise ValueError("empty record")
    kind = GeneratorKind.parse(fields[0])
    params, offset = [], None
    for f in fields[1:]:
        name, eq, value = f.partition("=")
        if not eq:
            raise ValueError(f"expected name=value, got {f!r}")
        if name == "offset":
            offset = _int(value)
        else:
            params.append((name, _parse_param(kind, name, value)))
    if offset is None:
        raise ValueError("missing offset=")
    words = tuple(int(w, 16) for w in tail.split())
    if any(w >= 2**32 for w in words):
        raise ValueError("expected words must be 32-bit")
    return KatVector(kind, tuple(params), offset, words)


def parse_kat_text(text: str, source: str = "<string>") -> list[KatVector]:
    vectors = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            vectors.append(parse_kat_line(line))
        except ValueError as exc:
            raise KatFormatError(f"{source}:{lineno}: {exc}") from exc
    return vectors


def load_kat_file(path) -> list[KatVector]:
    path = Path(path)
    return parse_kat_text(path.read_text(), str(path))


def golden_vectors() -> list[KatVector]:
    """The vectors shipped with the package."""
    text = resources.files("minicrush").joinpath("data/golden_vectors.txt").read_text()
    return parse_kat_text(text, "golden_vectors.txt")


# --------------------------------------------------------------------------
# raw dumps


def write_raw(words, out) -> None:
    """Write words as little-endian uint32 to a path or binary file object."""
    data = np.asarray(words, dtype=np.uint32).astype("<u4").tobytes()
    if hasattr(out, "write"):
        out.write(data)
    else:
        Path(out).write_bytes(data)


def read_raw(source) -> np.ndarray:
    data = source.read() if hasattr(source, "read") else Path(source).read_bytes()
    if len(data) % 4:
        name = getattr(source, "name", source)
        raise KatFormatError(f"{name}: {len(data)} bytes is not a whole number of 32-bit words")
    return np.frombuffer(data, dtype="<u4").astype(np.uint32)


@dataclass(frozen=True)
class StreamDiff:
    equal: bool
    compared: int  # words compared (length of the shorter stream)
    divergence: int | None  # first differing index, or the shorter length on a length mismatch
    length_a: int
    length_b: int

    def __str__(self) -> str:
        if self.equal:
            return f"equal ({self.compared} words)"
        if self.divergence < self.compared:
            return f"differ at word {self.divergence} (equal prefix {self.divergence} words)"
        return (f"equal prefix of {self.compared} words, then lengths differ "
                f"({self.length_a} vs {self.length_b})")


def diff_words(a, b) -> StreamDiff:
    a = np.asarray(a, dtype=np.uint32)
    b = np.asarray(b, dtype=np.uint32)
    n = min(len(a), len(b))
    mismatch = np.flatnonzero(a[:n] != b[:n])
    if mismatch.size:
        return StreamDiff(False, n, int(mismatch[0]), len(a), len(b))
    if len(a) != len(b):
        return StreamDiff(False, n, n, len(a), len(b))
    return StreamDiff(True, n, None, len(a), len(b))


def diff_streams(dump_a, dump_b) -> StreamDiff:
    return diff_words(read_raw(dump_a), read_raw(dump_b))


def verify_all(vectors=None, out=None) -> bool:
    ok = True
    for v in golden_vectors() if vectors is None else vectors:
        r = verify_kat(v)
        ok &= r.passed
        if out is not None:
            print(r, file=out)
    return ok


if __name__ == "__main__":  # pragma: no cover
    sys.exit(0 if verify_all(out=sys.stdout) else 1)
