"""Regenerate src/minicrush/data/golden_vectors.txt from independent oracles.

Oracles (none of them share code with minicrush):

* Mt19937: NumPy's legacy ``RandomState`` (Nishimura and Matsumoto's
  mt19937ar, ``init_genrand`` seeding); raw words via ``randint(0, 2**32)``.
* Pcg32: randomgen's ``PCG32`` (pcg-c-basic XSH-RR 64/32), with its state set
  to the value ``pcg32_srandom_r`` produces; offsets use randomgen's
  ``advance``.
* Philox4x32_10: randomgen's ``Philox(number=4, width=32)`` (Random123).
  randomgen increments the counter before each block, so it is handed
  ``counter - 1``.

Usage::

    pip install randomgen==2.3.0
    python tools/make_golden.py > src/minicrush/data/golden_vectors.txt
"""

import sys

import numpy as np
import randomgen
from randomgen import PCG32, Philox

M64 = 2**64 - 1
PCG_MULT = 6364136223846793005
WORDS = 16


def mt_words(seed, offset, n):
    rs = np.random.RandomState(seed)
    out = rs.randint(0, 2**32, size=offset + n, dtype=np.uint64)
    return [int(w) for w in out[offset:]]


def pcg_words(initstate, initseq, offset, n):
    inc = ((initseq << 1) | 1) & M64
    state = (0 * PCG_MULT + inc) & M64
    state = (state + initstate) & M64
    state = (state * PCG_MULT + inc) & M64
    g = PCG32(0)
    g.state = {"bit_generator": "randomgen.pcg32.PCG32", "state": {"state": state, "inc": inc}}
    if offset:
        g.advance(offset)
    return [int(w) for w in g.random_raw(n)]


def philox_words(counter, key, offset, n):
    c = sum(w << (32 * i) for i, w in enumerate(counter))
    k = key[0] | (key[1] << 32)
    g = Philox(counter=(c - 1) % 2**128, key=k, number=4, width=32)
    return [int(w) for w in g.random_raw(offset + n)[offset:]]


def line(kind, params, offset, words):
    return f"{kind} {params} offset={offset} : " + " ".join(f"{w:08x}" for w in words)


def hexwords(ws):
    return ",".join(f"0x{w:08x}" for w in ws)


def main(out=sys.stdout):
    print("# minicrush golden known-answer vectors", file=out)
    print("# generated by tools/make_golden.py; do not edit by hand", file=out)
    print(f"# Mt19937 oracle: numpy {np.__version__} RandomState (mt19937ar init_genrand)", file=out)
    print(f"# Pcg32 oracle: randomgen {randomgen.__version__} PCG32 (pcg32_srandom_r state)", file=out)
    print(f"# Philox4x32_10 oracle: randomgen {randomgen.__version__} Philox(number=4, width=32)", file=out)
    print("# format: kind params offset=<n> : expected words (hex)", file=out)
    print(file=out)

    for seed, offset in [(5489, 0), (5489, 620), (5489, 100_000), (0, 0), (1, 0), (42, 0),
                         (19650218, 0), (4294967295, 0), (123456789, 1247)]:
        print(line("Mt19937", f"seed={seed}", offset, mt_words(seed, offset, WORDS)), file=out)
    print(file=out)

    for initstate, initseq, offset in [(42, 54, 0), (42, 54, 1_000_003), (42, 54, 2**40 + 7),
                                       (0, 0, 0), (M64, M64, 0),
                                       (0x853C49E6748FEA9B, 0xDA3E39CB94B95BDB, 0),
                                       (0x0123456789ABCDEF, 0xFEDCBA9876543210, 12345)]:
        words = pcg_words(initstate, initseq, offset, WORDS)
        print(line("Pcg32", f"initstate={initstate:#x} initseq={initseq:#x}", offset, words), file=out)
    print(file=out)

    mask = 0xFFFFFFFF
    for counter, key, offset in [((0, 0, 0, 0), (0, 0), 0),
                                 ((mask,) * 4, (mask, mask), 0),
                                 ((0x243F6A88, 0x85A308D3, 0x13198A2E, 0x03707344),
                                  (0xA4093822, 0x299F31D0), 0),
                                 ((mask, 0, 0, 0), (1, 2), 0),
                                 ((mask, mask, mask, 0), (0xDEADBEEF, 0xCAFEF00D), 2),
                                 ((7, 0, 0, 0), (0x12345678, 0x9ABCDEF0), 10_001)]:
        words = philox_words(counter, key, offset, WORDS)
        print(line("Philox4x32_10", f"counter={hexwords(counter)} key={hexwords(key)}", offset, words),
              file=out)


if __name__ == "__main__":
    main()
