"""Scratch: compare LZ78 vs LZMW bit-level estimators for the dep(x,x) criterion."""
import sys
sys.path.insert(0, "src")
from balext.mixing import stream_value, stream_bits, substream


def bits_of(value, length):
    return [(value >> (length - 1 - i)) & 1 for i in range(length)]


def lz78_bits(bits):
    """Classic LZ78: phrases = (pointer, next bit); cost in bits."""
    # trie: dict (node, bit) -> node; node 0 = empty phrase
    trie = {}
    nnodes = 1
    cost = 0
    node = 0
    for b in bits:
        nxt = trie.get((node, b))
        if nxt is None:
            # new phrase: pointer among existing nnodes nodes + 1 literal bit
            cost += max(nnodes - 1, 0).bit_length() + 1  # ceil(log2 nnodes) + 1
            trie[(node, b)] = nnodes
            nnodes += 1
            node = 0
        else:
            node = nxt
    if node != 0:
        cost += max(nnodes - 1, 0).bit_length()  # trailing partial phrase: pointer only
    return cost


def lzmw_bits(bits):
    """LZMW: longest dictionary match; new word = prev match + this match."""
    # trie as dict of dicts; word ids count
    root = {}
    # seed with single bits
    root[0] = {"$": 1}
    root[1] = {"$": 2}
    nwords = 2
    cost = 0
    i = 0
    n = len(bits)
    prev_word = None  # list of bits
    while i < n:
        node = root
        j = i
        last_end = None
        while j < n:
            b = bits[j]
            if b not in node:
                break
            node = node[b]
            j += 1
            if "$" in node:
                last_end = j
        assert last_end is not None
        match = bits[i:last_end]
        cost += max(nwords - 1, 0).bit_length()  # index among nwords words
        if prev_word is not None:
            new_word = prev_word + match
            node = root
            for b in new_word:
                node = node.setdefault(b, {})
            if "$" not in node:
                nwords += 1
                node["$"] = nwords
        prev_word = match
        i = last_end
    return cost


def run(name, est, n=1024, seeds=60):
    import statistics
    ratios = []
    deps_indep = []
    for s in range(seeds):
        x = bits_of(stream_bits(substream(s, 1), n), n)
        y = bits_of(stream_bits(substream(s, 2), n), n)
        kx = est(x)
        kxx = est(x + x)
        dep_xx = 2 * kx - kxx
        ratios.append(dep_xx / kx)
        kxy = est(x + y)
        deps_indep.append(kx + est(y) - kxy)
    print(f"{name}: dep(x,x)/K(x): min={min(ratios):.3f} mean={statistics.mean(ratios):.3f}")
    print(f"{name}: K(x) at n={n}: ~{est(bits_of(stream_bits(substream(0,1),n),n))}")
    print(f"{name}: dep(x,y) indep: min={min(deps_indep):.1f} max={max(deps_indep):.1f} mean={statistics.mean(deps_indep):.1f}")


run("LZ78", lz78_bits)
run("LZMW", lzmw_bits)
