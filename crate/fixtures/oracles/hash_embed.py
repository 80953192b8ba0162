"""Independent reimplementation of the baseline hashing embedder.

Prints the values frozen into the kgmap-core embedding tests.
"""
import math
import re

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
MASK = (1 << 64) - 1


def fnv1a64(data: bytes) -> int:
    h = FNV_OFFSET
    for b in data:
        h ^= b
        h = (h * FNV_PRIME) & MASK
    return h


def features(text):
    out = []
    for tok in re.split(r"[^0-9a-zA-Z]+", text.lower()):
        if not tok:
            continue
        out.append("w:" + tok)
        out.extend("t:" + tok[i:i + 3] for i in range(len(tok) - 2))
    return out


def embed(text, dims):
    v = [0.0] * dims
    for f in features(text):
        h = fnv1a64(f.encode())
        v[h % dims] += -1.0 if h >> 63 else 1.0
    n = math.sqrt(sum(x * x for x in v))
    return [x / n for x in v] if n else v


def cosine(a, b):
    return sum(x * y for x, y in zip(a, b))


if __name__ == "__main__":
    for s in ["", "a", "w:id", "t:mov"]:
        print(f"fnv1a64({s!r}) = {fnv1a64(s.encode()):#018x}")
    v = embed("id", 64)
    print("embed('id', 64) nonzero:", [(i, round(x, 12)) for i, x in enumerate(v) if x])
    v = embed("Movie title", 64)
    print("embed('Movie title', 64) nonzero:", [(i, round(x, 12)) for i, x in enumerate(v) if x])
    a, b, c = (embed(t, 512) for t in ["movie title", "film name", "postal code"])
    print(f"cos(movie title, film name)   = {cosine(a, b):.15f}")
    print(f"cos(movie title, postal code) = {cosine(a, c):.15f}")
