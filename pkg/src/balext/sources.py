"""Evaluation harness: planted-dependency sources, complexity surrogates,
dependency estimation, and output-quality metrics.

The planted generator produces pairs x = r1 || shared || 0-pad and
y = r2 || shared || 0-pad whose dependency is |shared| by construction,
giving every experiment a ground-truth axis next to the noisy estimate.

The built-in complexity surrogate is a bit-level greedy parser with an
unbounded previous-occurrence window (see :class:`MatchCompressor` for the
exact token costs).  It is self-contained and platform independent; the
thresholds THETA_INDEP / THETA_SYM below were fixed once by the committed
calibration campaign (scripts/calibrate_thresholds.py) and are not tuned
to any test.

Collision entropy is the primary output metric: the plug-in min-entropy
estimator is badly biased at desk-scale sample counts, while the collision
probability concentrates fast.
"""

from __future__ import annotations

import csv
import json
import math
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Protocol

from .core import (
    BitString,
    InvalidParams,
    ceil_log2,
    derive_string_params,
    round_half_up,
)
from .extract import TablePolicy, table_for
from .mixing import stream_bits, stream_value, substream

# Fixed by the calibration campaign committed under calibration/ (n = 1024,
# 1000 seeds): max |dep| observed on independent pairs was 48 bits and the
# max symmetry gap 44 bits; both scaled by 1.5 and rounded up to 8.
THETA_INDEP = 72.0
THETA_SYM = 72.0


@dataclass(frozen=True)
class PlantedPairSpec:
    """Generative model: each string carries round(sigma*n) seeded-random
    bits of which the trailing round(alpha*n) are shared between the pair;
    the rest of the length is zero padding."""

    n: int
    sigma: Fraction
    alpha: Fraction
    seed: int

    def __post_init__(self) -> None:
        sigma = Fraction(self.sigma)
        alpha = Fraction(self.alpha)
        if not 0 <= alpha <= sigma <= 1:
            raise InvalidParams("need 0 <= alpha <= sigma <= 1")
        if self.n < 1:
            raise InvalidParams("need n >= 1")

    @property
    def shared_bits(self) -> int:
        return round_half_up(Fraction(self.alpha) * self.n)

    @property
    def random_bits(self) -> int:
        return round_half_up(Fraction(self.sigma) * self.n)


def gen_planted_pair(spec: PlantedPairSpec) -> tuple[BitString, BitString]:
    """Deterministic planted pair; streams 1, 2, 3 of the spec seed feed
    r1, r2, and the shared block respectively."""
    n_shared = spec.shared_bits
    n_free = spec.random_bits - n_shared
    pad = spec.n - spec.random_bits
    shared = stream_bits(substream(spec.seed, 3), n_shared)
    r1 = stream_bits(substream(spec.seed, 1), n_free)
    r2 = stream_bits(substream(spec.seed, 2), n_free)
    x = ((r1 << n_shared) | shared) << pad
    y = ((r2 << n_shared) | shared) << pad
    return BitString(x, spec.n), BitString(y, spec.n)


# ---------------------------------------------------------------------------
# Complexity surrogates
# ---------------------------------------------------------------------------


class ComplexityEstimator(Protocol):
    def estimate(self, s: BitString) -> float: ...


class _SuffixAutomaton:
    """Online suffix automaton over bits; accepts every factor of the text."""

    __slots__ = ("link", "length", "go", "last")

    def __init__(self) -> None:
        self.link = [-1]
        self.length = [0]
        self.go: list[dict[int, int]] = [{}]
        self.last = 0

    def extend(self, c: int) -> None:
        link, length, go = self.link, self.length, self.go
        cur = len(length)
        length.append(length[self.last] + 1)
        link.append(0)
        go.append({})
        p = self.last
        while p != -1 and c not in go[p]:
            go[p][c] = cur
            p = link[p]
        if p != -1:
            q = go[p][c]
            if length[p] + 1 == length[q]:
                link[cur] = q
            else:
                clone = len(length)
                length.append(length[p] + 1)
                link.append(link[q])
                go.append(dict(go[q]))
                while p != -1 and go[p].get(c) == q:
                    go[p][c] = clone
                    p = link[p]
                link[q] = clone
                link[cur] = clone
        self.last = cur


def _gamma_bits(n: int) -> int:
    # Elias gamma code length for n >= 1
    return 2 * (n.bit_length() - 1) + 1


class MatchCompressor:
    """Self-contained bit-level compressor used as the complexity surrogate.

    Greedy left-to-right parse.  At position i the parser finds the longest
    prefix of the remaining input that occurs as a factor of the already
    emitted text (positions 0..i-1, unbounded window).  A match of length L
    is taken iff L > 1 + gamma(L) + offs(i), i.e. iff its token is strictly
    cheaper than carrying the same bits literally; otherwise the bit joins
    the current literal run.  Token costs in bits:

        literal run of L bits:  1 + gamma(L) + L
        match of length L:      1 + gamma(L) + offs(i)

    where gamma(L) = 2*floor(log2 L) + 1 (Elias gamma) and offs(i) =
    max(1, ceil(log2 i)) encodes a match start within the emitted text.
    The estimate is the total token cost; the empty string costs 1 (an
    empty-stream marker).
    """

    def estimate(self, s: BitString) -> float:
        return float(self.cost_bits(s))

    def cost_bits(self, s: BitString) -> int:
        n = len(s)
        if n == 0:
            return 1
        bits = [s.bit(i) for i in range(n)]
        sa = _SuffixAutomaton()
        go = sa.go
        cost = 0
        lit_run = 0
        i = 0
        while i < n:
            node = 0
            j = i
            while j < n:
                nxt = go[node].get(bits[j])
                if nxt is None:
                    break
                node = nxt
                j += 1
            match_len = j - i
            offs = max(1, ceil_log2(i)) if i > 0 else 1
            if match_len >= 1 and match_len > 1 + _gamma_bits(match_len) + offs:
                if lit_run:
                    cost += 1 + _gamma_bits(lit_run) + lit_run
                    lit_run = 0
                cost += 1 + _gamma_bits(match_len) + offs
                for k in range(i, j):
                    sa.extend(bits[k])
                i = j
            else:
                lit_run += 1
                sa.extend(bits[i])
                i += 1
        if lit_run:
            cost += 1 + _gamma_bits(lit_run) + lit_run
        return cost


class ExternalCompressorEstimator:
    """Adapter for byte-oriented compressors (e.g. zlib.compress).

    Estimates 8 * len(compress(packed bits)).  Excluded from acceptance
    tests; results depend on the external library's version.
    """

    def __init__(self, compress: Callable[[bytes], bytes]):
        self._compress = compress

    def estimate(self, s: BitString) -> float:
        return 8.0 * len(self._compress(s.to_bytes()))


def dep_estimate(x: BitString, y: BitString, est: ComplexityEstimator) -> float:
    """est(x) + est(y) - est(x || y); may be negative for real estimators."""
    return est.estimate(x) + est.estimate(y) - est.estimate(x.concat(y))


# ---------------------------------------------------------------------------
# Empirical entropy metrics
# ---------------------------------------------------------------------------


def _as_counter(samples) -> tuple[Counter, int]:
    if isinstance(samples, Counter):
        counts = samples
    else:
        counts = Counter(
            (s.value, s.length) if isinstance(s, BitString) else s for s in samples
        )
    total = sum(counts.values())
    if total == 0:
        raise InvalidParams("samples must be nonempty")
    return counts, total


def min_entropy_empirical(samples) -> float:
    """-log2 of the largest empirical frequency."""
    counts, total = _as_counter(samples)
    return -math.log2(max(counts.values()) / total) + 0.0


def collision_entropy_empirical(samples) -> float:
    """-log2 of the empirical collision probability sum p_i^2."""
    counts, total = _as_counter(samples)
    cp = sum(c * c for c in counts.values()) / (total * total)
    return -math.log2(cp)


# ---------------------------------------------------------------------------
# Extraction experiments
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TrialRow:
    trial: int
    seed: int
    dep_planted: int
    dep_hat: float
    z_hex: str


@dataclass(frozen=True)
class ExperimentReport:
    spec: PlantedPairSpec
    trials: int
    m_exp: int
    nominal_bound_bits: Fraction   # (2 sigma - alpha) n - 9 ceil(log2 n)
    collision_entropy: float
    min_entropy: float
    distinct_outputs: int
    insufficient_sampling: bool
    dep_hat_mean: float
    dep_hat_min: float
    dep_hat_max: float
    table_digest: str
    rows: tuple[TrialRow, ...]

    def summary_dict(self) -> dict:
        return {
            "n": self.spec.n,
            "sigma": str(Fraction(self.spec.sigma)),
            "alpha": str(Fraction(self.spec.alpha)),
            "seed": self.spec.seed,
            "trials": self.trials,
            "m_exp": self.m_exp,
            "nominal_bound_bits": float(self.nominal_bound_bits),
            "collision_entropy": self.collision_entropy,
            "min_entropy": self.min_entropy,
            "distinct_outputs": self.distinct_outputs,
            "insufficient_sampling": self.insufficient_sampling,
            "dep_planted": self.spec.shared_bits,
            "dep_hat_mean": self.dep_hat_mean,
            "dep_hat_min": self.dep_hat_min,
            "dep_hat_max": self.dep_hat_max,
            "table_digest": self.table_digest,
        }

    def to_json(self) -> str:
        return json.dumps(self.summary_dict(), sort_keys=True)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["trial", "seed", "dep_planted", "dep_hat", "z_hex"])
            for r in self.rows:
                w.writerow([r.trial, r.seed, r.dep_planted, f"{r.dep_hat:.1f}", r.z_hex])


def _experiment_chunk(spec, table, m_exp, estimator, start, count):
    hexw = (m_exp + 3) // 4
    rows = []
    outs: Counter = Counter()
    for t in range(start, start + count):
        t_seed = stream_value(spec.seed, t)
        x, y = gen_planted_pair(
            PlantedPairSpec(spec.n, spec.sigma, spec.alpha, t_seed)
        )
        z = table.lookup(x.value, y.value)
        outs[z] += 1
        dep_hat = dep_estimate(x, y, estimator)
        rows.append(
            TrialRow(t, t_seed, spec.shared_bits, dep_hat, format(z, f"0{hexw}x"))
        )
    return rows, outs


def run_extraction_experiment(
    spec: PlantedPairSpec,
    trials: int,
    policy: TablePolicy = TablePolicy(),
    estimator: ComplexityEstimator | None = None,
    *,
    threads: int = 1,
) -> ExperimentReport:
    """Extract one output per trial through a single fixed table.

    Trial t draws its pair from seed ``stream_value(spec.seed, t)``; the
    table comes from the policy once and is shared across trials.  Reports
    are bit-identical for any thread count.
    """
    if trials < 1:
        raise InvalidParams("need trials >= 1")
    estimator = estimator if estimator is not None else MatchCompressor()
    params = derive_string_params(spec.n, spec.sigma, spec.alpha, strict=False)
    table = table_for(params.table_params(), policy)
    m_exp = params.m_exp

    per = (trials + threads - 1) // threads
    starts = list(range(0, trials, per))
    args = [(spec, table, m_exp, estimator, s0, min(per, trials - s0)) for s0 in starts]
    if threads <= 1 or len(args) == 1:
        results = [_experiment_chunk(*a) for a in args]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = [f.result() for f in [pool.submit(_experiment_chunk, *a) for a in args]]

    rows: list[TrialRow] = []
    outs: Counter = Counter()
    for chunk_rows, chunk_outs in results:
        rows.extend(chunk_rows)
        outs.update(chunk_outs)

    deps = [r.dep_hat for r in rows]
    nominal = (2 * Fraction(spec.sigma) - Fraction(spec.alpha)) * spec.n - 9 * ceil_log2(
        spec.n
    )
    return ExperimentReport(
        spec=spec,
        trials=trials,
        m_exp=m_exp,
        nominal_bound_bits=nominal,
        collision_entropy=collision_entropy_empirical(outs),
        min_entropy=min_entropy_empirical(outs),
        distinct_outputs=len(outs),
        insufficient_sampling=trials < (1 << m_exp),
        dep_hat_mean=sum(deps) / len(deps),
        dep_hat_min=min(deps),
        dep_hat_max=max(deps),
        table_digest=table.digest(),
        rows=tuple(rows),
    )
