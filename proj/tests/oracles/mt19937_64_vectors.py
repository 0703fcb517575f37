"""Independent MT19937-64 + Box-Muller reference used to freeze the synth test vectors.

Run: python3 tests/oracles/mt19937_64_vectors.py
"""
import math

MASK = (1 << 64) - 1


class MT19937_64:
    n, m = 312, 156

    def __init__(self, seed):
        self.mt = [0] * self.n
        self.mt[0] = seed & MASK
        for i in range(1, self.n):
            prev = self.mt[i - 1]
            self.mt[i] = (6364136223846793005 * (prev ^ (prev >> 62)) + i) & MASK
        self.idx = self.n

    def _twist(self):
        upper, lower = 0xFFFFFFFF80000000, 0x7FFFFFFF
        for i in range(self.n):
            x = (self.mt[i] & upper) | (self.mt[(i + 1) % self.n] & lower)
            xa = x >> 1
            if x & 1:
                xa ^= 0xB5026F5AA96619E9
            self.mt[i] = self.mt[(i + self.m) % self.n] ^ xa
        self.idx = 0

    def next(self):
        if self.idx >= self.n:
            self._twist()
        y = self.mt[self.idx]
        self.idx += 1
        y ^= (y >> 29) & 0x5555555555555555
        y ^= (y << 17) & 0x71D67FFFEDA60000
        y ^= (y << 37) & 0xFFF7EEE000000000
        y ^= y >> 43
        return y & MASK


def uniform(rng):
    return (rng.next() >> 11) * 2.0 ** -53


def gaussians(rng, count):
    out = []
    while len(out) < count:
        u1 = 1.0 - uniform(rng)
        u2 = uniform(rng)
        r = math.sqrt(-2.0 * math.log(u1))
        a = 2.0 * math.pi * u2
        out += [r * math.cos(a), r * math.sin(a)]
    return out[:count]


if __name__ == "__main__":
    g = MT19937_64(5489)
    for _ in range(9999):
        g.next()
    print("default seed, 10000th output:", g.next())
    g = MT19937_64(42)
    print("seed 42 first u64:", [g.next() for _ in range(3)])
    g = MT19937_64(42)
    print("seed 42 first uniforms:", [repr(uniform(g)) for _ in range(3)])
    g = MT19937_64(42)
    print("seed 42 first gaussians:", [repr(x) for x in gaussians(g, 4)])
