"""Scratch: LZ77-style bit-level estimator via online suffix automaton."""
import sys, time, statistics
sys.path.insert(0, "src")
from balext.mixing import stream_bits, substream


class _SA:
    """Online suffix automaton over bits; recognizes every factor of the text so far."""
    __slots__ = ("link", "length", "go", "last")

    def __init__(self):
        self.link = [-1]
        self.length = [0]
        self.go = [{}]
        self.last = 0

    def extend(self, c):
        cur = len(self.length)
        self.length.append(self.length[self.last] + 1)
        self.link.append(-2)
        self.go.append({})
        p = self.last
        while p != -1 and c not in self.go[p]:
            self.go[p][c] = cur
            p = self.link[p]
        if p == -1:
            self.link[cur] = 0
        else:
            q = self.go[p][c]
            if self.length[p] + 1 == self.length[q]:
                self.link[cur] = q
            else:
                clone = len(self.length)
                self.length.append(self.length[p] + 1)
                self.link.append(self.link[q])
                self.go.append(dict(self.go[q]))
                while p != -1 and self.go[p].get(c) == q:
                    self.go[p][c] = clone
                    p = self.link[p]
                self.link[q] = clone
                self.link[cur] = clone
        self.last = cur


def gamma_bits(n):
    return 2 * (n.bit_length() - 1) + 1


def lz77_cost(bits):
    n = len(bits)
    sa = _SA()
    cost = 0
    lit_run = 0
    i = 0
    while i < n:
        # longest factor of bits[0:i] starting at i
        node = 0
        length = 0
        j = i
        while j < n:
            nxt = sa.go[node].get(bits[j])
            if nxt is None:
                break
            node = nxt
            j += 1
        length = j - i
        off_bits = max(1, (i - 1).bit_length()) if i > 0 else 1
        take = length >= 1 and length > 1 + gamma_bits(length) + off_bits
        if take:
            if lit_run:
                cost += 1 + gamma_bits(lit_run) + lit_run
                lit_run = 0
            cost += 1 + gamma_bits(length) + off_bits
            for k in range(i, i + length):
                sa.extend(bits[k])
            i += length
        else:
            lit_run += 1
            sa.extend(bits[i])
            i += 1
    if lit_run:
        cost += 1 + gamma_bits(lit_run) + lit_run
    return cost


def bits_of(value, length):
    return [(value >> (length - 1 - i)) & 1 for i in range(length)]


n = 1024
t0 = time.time()
ratios, deps = [], []
for s in range(100):
    x = bits_of(stream_bits(substream(s, 1), n), n)
    y = bits_of(stream_bits(substream(s, 2), n), n)
    kx = lz77_cost(x)
    dep_xx = 2 * kx - lz77_cost(x + x)
    ratios.append(dep_xx / kx)
    deps.append(kx + lz77_cost(y) - lz77_cost(x + y))
dt = time.time() - t0
print(f"dep(x,x)/K(x): min={min(ratios):.3f} mean={statistics.mean(ratios):.3f}")
print(f"K(x): {lz77_cost(bits_of(stream_bits(substream(0,1),n),n))}")
print(f"dep indep: min={min(deps)} max={max(deps)} mean={statistics.mean(deps):.1f}")
print(f"time for 100 seeds x 4 parses: {dt:.1f}s")
