"""
Stochastic rounds, bit transmission with retry, and the lab-director game.

Each round is one photon.  Alice estimates ``1`` (Bob not blocking) on a
D0 click and ``0`` (Bob blocking) on a D1 click; anything else is a lost
round.  By default rounds are sampled from the infinite-stage closed form
(``ProtocolParams.m = None``); a finite ``m`` samples the propagated
distribution instead.

Random streams come from ``make_rng(seed, stream)`` so that a run is
reproducible from its (seed, stream, parameters) triple.
"""

from __future__ import annotations

import enum
import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import binomtest

from .exceptions import CapExceededError, UsageError
from .protocol import ProtocolParams, outcome_distribution, postselected_summary

DEFAULT_ATTEMPT_CAP = 10 ** 6
DEFAULT_PAIR_CAP = 10 ** 8
_PAIR_CHUNK = 1024


class RoundOutcome(enum.IntEnum):
    D0 = 0
    D1 = 1
    D3 = 2
    ABSORBED_BY_BOB = 3

    @property
    def lost(self) -> bool:
        return self in (RoundOutcome.D3, RoundOutcome.ABSORBED_BY_BOB)


ESTIMATE = {RoundOutcome.D0: 1, RoundOutcome.D1: 0}


def make_rng(seed: int = 0, stream: int = 0) -> np.random.Generator:
    """PCG64 generator keyed by a 64-bit seed and a stream id."""
    ss = np.random.SeedSequence(int(seed) & (2 ** 64 - 1), spawn_key=(int(stream),))
    return np.random.Generator(np.random.PCG64(ss))


def _cdf(params: ProtocolParams) -> np.ndarray:
    d = outcome_distribution(params)
    probs = np.clip([d.d0, d.d1, d.d3, d.lost], 0.0, None)
    cdf = np.cumsum(probs / probs.sum())
    cdf[-1] = 1.0
    return cdf


def sample_rounds(params: ProtocolParams, n: int, rng: np.random.Generator) -> np.ndarray:
    """``n`` independent round outcomes as an integer array of ``RoundOutcome`` codes."""
    return np.searchsorted(_cdf(params), rng.random(n), side="right")


def run_round(params: ProtocolParams, rng: np.random.Generator) -> RoundOutcome:
    u = rng.random()
    return RoundOutcome(int(np.searchsorted(_cdf(params), u, side="right")))


def transmit_bit(params: ProtocolParams, bit: int, rng: np.random.Generator,
                 attempt_cap: int = DEFAULT_ATTEMPT_CAP) -> tuple[int, int, list[RoundOutcome]]:
    """Repeat rounds until D0 or D1 clicks.

    Returns ``(estimate, attempts, outcomes)``; Bob blocks when ``bit == 0``.
    """
    if bit not in (0, 1):
        raise UsageError(f"bit must be 0 or 1, got {bit!r}")
    cdf = _cdf(params.with_blocking(bit == 0))
    outcomes = []
    for attempt in range(1, attempt_cap + 1):
        out = RoundOutcome(int(np.searchsorted(cdf, rng.random(), side="right")))
        outcomes.append(out)
        if not out.lost:
            return ESTIMATE[out], attempt, outcomes
    raise CapExceededError(f"no post-selected click within {attempt_cap} attempts",
                           partial={"attempts": attempt_cap, "outcomes": Counter(outcomes)})


@dataclass
class TransmissionStats:
    bits_sent: int = 0
    bits_correct: int = 0
    total_rounds: int = 0
    rounds_lost: int = 0
    counts: dict = field(default_factory=lambda: {o.name: 0 for o in RoundOutcome})

    @property
    def accuracy(self) -> float:
        return self.bits_correct / self.bits_sent if self.bits_sent else math.nan

    def as_dict(self) -> dict:
        return {
            "bits_sent": self.bits_sent,
            "bits_correct": self.bits_correct,
            "accuracy": self.accuracy,
            "total_rounds": self.total_rounds,
            "rounds_lost": self.rounds_lost,
            "counts": dict(self.counts),
        }


def transmit_message(params: ProtocolParams, bits, rng: np.random.Generator,
                     attempt_cap: int = DEFAULT_ATTEMPT_CAP) -> TransmissionStats:
    bits = list(bits)
    if not bits:
        raise UsageError("message is empty")
    stats = TransmissionStats()
    for bit in bits:
        try:
            est, attempts, outcomes = transmit_bit(params, bit, rng, attempt_cap)
        except CapExceededError as exc:
            stats.total_rounds += attempt_cap
            stats.rounds_lost += attempt_cap
            for o, c in exc.partial["outcomes"].items():
                stats.counts[o.name] += c
            raise CapExceededError(str(exc), partial=stats) from None
        stats.bits_sent += 1
        stats.bits_correct += int(est == bit)
        stats.total_rounds += attempts
        stats.rounds_lost += attempts - 1
        for o in outcomes:
            stats.counts[o.name] += 1
    return stats


def balanced_message(n: int) -> list[int]:
    """Alternating 0/1 message of length ``n``."""
    return [k % 2 for k in range(n)]


def lab_director(params: ProtocolParams, message_len: int = 10,
                 rng: np.random.Generator | None = None,
                 pair_cap: int = DEFAULT_PAIR_CAP) -> tuple[int, float]:
    """Fire Alice and Bob on any lost photon; hire a new pair with a new message.

    Each pair sends ``message_len`` single-photon rounds.  Bob's raw bits are
    drawn with the blocking prior that balances the post-selected bits, so
    the per-round loss is ``P/(2-P)``.  Returns ``(pairs_used,
    winning_accuracy)``; a zero-length message succeeds vacuously with the
    first pair and an undefined (nan) accuracy.
    """
    rng = make_rng() if rng is None else rng
    if message_len < 0:
        raise UsageError("message length must be >= 0")
    if message_len == 0:
        return 1, math.nan
    p_block = postselected_summary(params.p).p_b_raw if params.p < 1 else 0.0
    cdf_b = _cdf(params.with_blocking(True))
    cdf_nb = _cdf(params.with_blocking(False))
    used = 0
    while used < pair_cap:
        n = min(_PAIR_CHUNK, pair_cap - used)
        blocking = rng.random((n, message_len)) < p_block
        u = rng.random((n, message_len))
        outcome = np.where(blocking, np.searchsorted(cdf_b, u, side="right"),
                           np.searchsorted(cdf_nb, u, side="right"))
        ok = np.all(outcome <= RoundOutcome.D1, axis=1)
        hits = np.flatnonzero(ok)
        if hits.size:
            i = hits[0]
            bits = np.where(blocking[i], 0, 1)
            est = np.where(outcome[i] == RoundOutcome.D0, 1, 0)
            return used + i + 1, float(np.mean(bits == est))
        used += n
    raise CapExceededError(f"no pair succeeded within {pair_cap} pairs",
                           partial={"pairs_used": used})


def lab_director_runs(params: ProtocolParams, message_len: int, reps: int,
                      rng: np.random.Generator, pair_cap: int = DEFAULT_PAIR_CAP) -> dict:
    """Repeat the lab-director game ``reps`` times and summarise."""
    pairs, accs = [], []
    for _ in range(reps):
        n, acc = lab_director(params, message_len, rng, pair_cap)
        pairs.append(n)
        accs.append(acc)
    pairs = np.array(pairs)
    accs = np.array(accs)
    p_l = _loss_with_prior(params)
    return {
        "reps": reps,
        "message_len": message_len,
        "mean_pairs": float(pairs.mean()),
        "expected_pairs": float((1.0 - p_l) ** -message_len) if p_l < 1 else math.inf,
        "mean_accuracy": float(np.nanmean(accs)) if message_len else math.nan,
        "pairs": pairs.tolist(),
    }


def _loss_with_prior(params: ProtocolParams) -> float:
    p_b = postselected_summary(params.p).p_b_raw if params.p < 1 else 0.0
    lb = outcome_distribution(params.with_blocking(True)).loss
    lnb = outcome_distribution(params.with_blocking(False)).loss
    return p_b * lb + (1 - p_b) * lnb


# ------------------------------------------------------------ tables


def wilson(k: int, n: int, level: float = 0.95) -> tuple[float, float]:
    ci = binomtest(int(k), int(n)).proportion_ci(confidence_level=level, method="wilson")
    return float(ci.low), float(ci.high)


@dataclass(frozen=True)
class Estimate:
    value: float
    low: float
    high: float
    k: int
    n: int

    def covers(self, x: float) -> bool:
        return self.low <= x <= self.high


def _estimate(k, n) -> Estimate:
    lo, hi = wilson(k, n)
    return Estimate(k / n, lo, hi, int(k), int(n))


@dataclass(frozen=True)
class EmpiricalTables:
    p: float
    n_rounds: int
    raw: dict          # {"B"|"NB": {"D0"|"D1"|"D3"|"lost": Estimate}}
    postselected: dict  # {("D0"|"D1", "B"|"NB"): Estimate}
    p_c: Estimate
    postselect_prob: Estimate


def empirical_tables(params: ProtocolParams, n_rounds: int, rng: np.random.Generator) -> EmpiricalTables:
    """Monte Carlo estimates of the raw and post-selected tables with Wilson 95% intervals.

    Raw columns use ``n_rounds`` rounds each.  The post-selected table comes
    from another ``n_rounds`` rounds in which Bob blocks with the balancing
    prior ``(1-P)/(2-P)``.
    """
    if n_rounds < 1000:
        raise UsageError("empirical tables need at least 1000 rounds")
    names = ("D0", "D1", "D3", "lost")
    raw = {}
    for col, blocking in (("B", True), ("NB", False)):
        codes = sample_rounds(params.with_blocking(blocking), n_rounds, rng)
        counts = np.bincount(codes, minlength=4)
        raw[col] = {name: _estimate(counts[i], n_rounds) for i, name in enumerate(names)}

    p_block = postselected_summary(params.p).p_b_raw if params.p < 1 else 0.0
    blocking = rng.random(n_rounds) < p_block
    u = rng.random(n_rounds)
    codes = np.where(blocking,
                     np.searchsorted(_cdf(params.with_blocking(True)), u, side="right"),
                     np.searchsorted(_cdf(params.with_blocking(False)), u, side="right"))
    kept = codes <= RoundOutcome.D1
    n_kept = int(kept.sum())
    post = {}
    for det, code in (("D0", RoundOutcome.D0), ("D1", RoundOutcome.D1)):
        for col, mask in (("B", blocking), ("NB", ~blocking)):
            post[(det, col)] = _estimate(int(np.sum(kept & mask & (codes == code))), max(n_kept, 1))
    correct = int(np.sum(kept & blocking & (codes == RoundOutcome.D1))
                  + np.sum(kept & ~blocking & (codes == RoundOutcome.D0)))
    return EmpiricalTables(
        p=params.p,
        n_rounds=n_rounds,
        raw=raw,
        postselected=post,
        p_c=_estimate(correct, max(n_kept, 1)),
        postselect_prob=_estimate(n_kept, n_rounds),
    )
