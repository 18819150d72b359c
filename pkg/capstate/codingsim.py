# **************************************************************************
# *
# * Authors:     Grigory Sharov (gsharov@mrc-lmb.cam.ac.uk) [1]
# *
# * [1] MRC Laboratory of Molecular Biology (MRC-LMB)
# *
# * This program is free software; you can redistribute it and/or modify
# * it under the terms of the GNU General Public License as published by
# * the Free Software Foundation; either version 3 of the License, or
# * (at your option) any later version.
# *
# * This program is distributed in the hope that it will be useful,
# * but WITHOUT ANY WARRANTY; without even the implied warranty of
# * MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
# * GNU General Public License for more details.
# *
# * You should have received a copy of the GNU General Public License
# * along with this program; if not, write to the Free Software
# * Foundation, Inc., 59 Temple Place, Suite 330, Boston, MA
# * 02111-1307  USA
# *
# *  All comments concerning this program package may be sent to the
# *  e-mail address 'gsharov@mrc-lmb.cam.ac.uk'
# *
# **************************************************************************

"""
Monte Carlo runs of the random-coding schemes behind the achievability
results: single-user strategy coding, superposition coding for the
degraded broadcast channel, block-Markov decode-and-forward with binning
for the degraded relay channel, and joint decoding for the multiple
access channel.

Codebooks hold auxiliary (strategy) letters. The encoder turns them into
channel inputs symbol by symbol with the causal state, x_i = t_{u_i}(s_i).
Every trial draws from its own generator spawned from the configured seed,
so results do not depend on the worker count.
"""

import math
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Optional, Sequence, Union

import numpy as np
from scipy.stats import norm

from capstate.channels import (BroadcastStateChannel, MACStateChannel, RelayStateChannel,
                               StateChannel, check_bc_degraded, check_relay_degraded,
                               induced_bc_strategy_channel, induced_mac_joint,
                               induced_strategy_channel, mac_strategy_tensor,
                               relay_strategy_tensor, strategy_tables)
from capstate.probcore import JointPmf, Pmf, mutual_information
from capstate.solvers import bc_point_terms, dmc_mutual_information, relay_rate_terms
from capstate.utils.errors import AxisError, CapExceededError, DegradednessError
from capstate.utils.tools import env_int, logger

DEFAULT_CODEBOOK_CAP = 2 ** 20
CONFIDENCE = 0.95


class Decoder(str, Enum):
    TYPICALITY = "typicality"
    ML = "ml"


@dataclass(frozen=True)
class SimConfig:
    """ One simulation point. `rate` is the single-user or relay message rate,
    `rate1`/`rate2` the two-user rates and `rate0` the relay bin rate, all in bits.
    """
    blocklength: int
    rate: float = 0.0
    rate1: float = 0.0
    rate2: float = 0.0
    rate0: float = 0.0
    trials: int = 500
    seed: int = 0
    decoder: Decoder = Decoder.ML
    epsilon: float = 0.1
    blocks: int = 2
    codebook_cap: Optional[int] = None
    fresh_codebook: bool = True
    binning: str = "balanced"
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "decoder", Decoder(self.decoder))
        if self.blocklength < 1:
            raise ValueError(f"Blocklength must be at least 1, got {self.blocklength}")
        for name in ("rate", "rate1", "rate2", "rate0"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative, got {getattr(self, name)}")
        if self.trials < 1:
            raise ValueError(f"At least one trial is needed, got {self.trials}")
        if self.epsilon <= 0:
            raise ValueError(f"Typicality slack must be positive, got {self.epsilon}")
        if self.blocks < 1:
            raise ValueError(f"Number of blocks must be positive, got {self.blocks}")
        if self.binning not in ("balanced", "uniform"):
            raise ValueError(f"Unknown binning '{self.binning}', use balanced or uniform")

    @property
    def cap(self) -> int:
        return self.codebook_cap or env_int("CAPSTATE_CODEBOOK_CAP", DEFAULT_CODEBOOK_CAP)

    def message_count(self, rate: float) -> int:
        """ ceil(2^{nR}), checked against the codebook cap. """
        exponent = self.blocklength * rate
        if exponent > math.log2(self.cap) + 1e-9:
            raise CapExceededError(f"2^(nR) = 2^{exponent:.3f} messages exceed the codebook cap {self.cap}")
        return max(1, math.ceil(round(2.0 ** exponent, 9)))

    def effective_rate(self, count: int) -> float:
        return math.log2(count) / self.blocklength

    def echo(self) -> dict:
        out = asdict(self)
        out["decoder"] = self.decoder.value
        out["codebook_cap"] = self.cap
        return out


def wilson_interval(errors: int, units: int, level: float = CONFIDENCE) -> tuple[float, float]:
    """ Center and half-width of the Wilson score interval. """
    if units == 0:
        return 0.0, 0.0
    z = float(norm.ppf(0.5 + level / 2.0))
    p = errors / units
    denom = 1.0 + z * z / units
    center = (p + z * z / (2.0 * units)) / denom
    margin = z / denom * math.sqrt(p * (1.0 - p) / units + z * z / (4.0 * units * units))
    return center, margin


@dataclass(frozen=True, eq=False)
class SimReport:
    """ Error counts of a simulation point.
    `events` are keyed by the error events of the scheme, `receivers` by the
    decoder that made the error; `units` counts decoded messages.
    """
    scheme: str
    errors: int
    units: int
    events: dict[str, int]
    receivers: dict[str, int]
    effective_rates: dict[str, float]
    union_bound: float
    conditions: dict[str, bool]
    config: dict = field(repr=False)

    @property
    def error_rate(self) -> float:
        return self.errors / self.units

    @property
    def half_width(self) -> float:
        return wilson_interval(self.errors, self.units)[1]

    def interval(self, receiver: Optional[str] = None) -> tuple[float, float]:
        errors = self.errors if receiver is None else self.receivers[receiver]
        center, margin = wilson_interval(errors, self.units)
        return max(center - margin, 0.0), min(center + margin, 1.0)

    def receiver_rate(self, receiver: str) -> float:
        return self.receivers[receiver] / self.units

    def row(self) -> dict:
        """ Flat record for tabular output. """
        out = {"scheme": self.scheme}
        for key in ("blocklength", "trials", "seed", "decoder", "epsilon", "blocks"):
            out[key] = self.config[key]
        for key, value in self.effective_rates.items():
            out[f"nominal_{key}"] = self.config[key]
            out[f"effective_{key}"] = value
        out.update(errors=self.errors, units=self.units, error_rate=self.error_rate,
                   wilson_half_width=self.half_width, union_bound=self.union_bound)
        for name, count in self.receivers.items():
            out[f"{name}_error_rate"] = count / self.units
        for name, count in self.events.items():
            out[f"event_{name}"] = count
        for name, holds in self.conditions.items():
            out[f"holds {name}"] = holds
        return out


@dataclass(frozen=True, eq=False)
class Codebook:
    """ Auxiliary-letter codewords, one array per role, plus the relay bin map. """
    words: dict[str, np.ndarray]
    bin_of: Optional[np.ndarray] = None


# ---------------------------------------------------------------------------
# Typicality and decoding helpers
# ---------------------------------------------------------------------------
def _typical_mask(cells: np.ndarray, probs: np.ndarray, epsilon: float) -> np.ndarray:
    """ Strong typicality of many sequences at once.
    cells: (M, n) flat joint-cell index per symbol; probs: flat joint pmf.
    """
    m, n = cells.shape
    c = probs.size
    counts = np.bincount((cells + c * np.arange(m)[:, None]).ravel(),
                         minlength=m * c).reshape(m, c)
    positive = probs > 0
    close = np.abs(counts[:, positive] / n - probs[positive]) <= epsilon * probs[positive] + 1e-12
    return np.all(close, axis=1) & np.all(counts[:, ~positive] == 0, axis=1)


def joint_typicality(seqs: Sequence[np.ndarray], joint: JointPmf, epsilon: float) -> bool:
    """ Are the sequences (one per axis of `joint`, in axis order) jointly
    epsilon-typical? Every cell frequency must be within epsilon times its
    probability, and zero-probability cells must not occur.
    """
    seqs = [np.asarray(s, dtype=np.intp) for s in seqs]
    if len(seqs) != len(joint.axes):
        raise AxisError(f"{len(seqs)} sequences given for a joint on axes {joint.axes}")
    n = seqs[0].size
    if n == 0 or any(s.ndim != 1 or s.size != n for s in seqs):
        raise ValueError(f"Sequences must be non-empty vectors of one length, got {[s.shape for s in seqs]}")
    for s, name, size in zip(seqs, joint.axes, joint.probs.shape):
        if s.min() < 0 or s.max() >= size:
            raise AxisError(f"Sequence for axis '{name}' leaves its alphabet of size {size}")
    cells = np.ravel_multi_index(seqs, joint.probs.shape)
    return bool(_typical_mask(cells[None, :], joint.probs.ravel(), epsilon)[0])


def _log2_kernel(kernel: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log2(kernel)


def _draw(probs: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """ One sample from every pmf stored along the last axis. """
    cdf = np.cumsum(probs, axis=-1)
    u = rng.random(probs.shape[:-1])
    return np.minimum((u[..., None] >= cdf).sum(axis=-1), probs.shape[-1] - 1)


def _conditional_codewords(cond: np.ndarray, parents: np.ndarray, count: int,
                           rng: np.random.Generator) -> np.ndarray:
    """ Superposition layer: for every parent codeword draw `count` children,
    letter by letter from cond[parent letter]. Result shape (P, count, n).
    """
    cdf = np.cumsum(cond, axis=-1)[parents]          # (P, n, K)
    u = rng.random((parents.shape[0], count, parents.shape[1]))
    letters = (u[..., None] >= cdf[:, None, :, :]).sum(axis=-1)
    return np.minimum(letters, cond.shape[-1] - 1)


def _ml(scores: np.ndarray, truth: int, rng: np.random.Generator) -> tuple[int, bool]:
    """ Maximum-likelihood pick with random tie-breaking.
    Also reports whether some competitor scores at least as high as the truth.
    """
    flat = scores.ravel()
    best = flat.max()
    winners = np.flatnonzero(flat == best)
    decoded = int(winners[0]) if winners.size == 1 else int(rng.choice(winners))
    rival = int(np.count_nonzero(flat >= flat[truth])) > 1
    return decoded, rival


def _unique(mask: np.ndarray) -> int:
    hits = np.flatnonzero(mask.ravel())
    return int(hits[0]) if hits.size == 1 else -1


def _union_bound(terms: Sequence[tuple[float, float, float]], n: int) -> float:
    """ min(1, sum of count * 2^{-n (info - slack)}) over the error events. """
    total = 0.0
    for count, info, slack in terms:
        if count <= 0:
            continue
        exponent = math.log2(count) - n * (info - slack)
        total += 1.0 if exponent > 0 else 2.0 ** exponent
    return min(total, 1.0)


def _conditional(joint: np.ndarray) -> np.ndarray:
    """ Rows of a 2-D joint pmf normalized to conditionals (zero rows stay zero). """
    sums = joint.sum(axis=1, keepdims=True)
    return np.divide(joint, sums, out=np.zeros_like(joint), where=sums > 0)


# ---------------------------------------------------------------------------
# Schemes
# ---------------------------------------------------------------------------
class _Scheme:
    """ One coding scheme: builds codebooks and runs single trials. """
    NAME = ""
    EVENTS: tuple[str, ...] = ()
    RECEIVERS: tuple[str, ...] = ()

    def __init__(self, cfg: SimConfig):
        self.cfg = cfg
        self.n = cfg.blocklength
        self.ml = cfg.decoder is Decoder.ML

    def codebook(self, rng: np.random.Generator) -> Codebook:
        raise NotImplementedError

    def trial(self, book: Codebook, rng: np.random.Generator) -> Counter:
        raise NotImplementedError

    def units_per_trial(self) -> int:
        return 1

    def run(self) -> Counter:
        cfg = self.cfg
        seeds = np.random.SeedSequence(cfg.seed).spawn(cfg.trials + 1)
        cached = None if cfg.fresh_codebook else self.codebook(np.random.default_rng(seeds[-1]))

        def one(k: int) -> Counter:
            rng = np.random.default_rng(seeds[k])
            book = cached if cached is not None else self.codebook(rng)
            return self.trial(book, rng)

        total: Counter = Counter()
        with ThreadPoolExecutor(max_workers=max(1, cfg.workers)) as executor:
            for outcome in executor.map(one, range(cfg.trials)):
                total.update(outcome)
        return total

    def report(self, rates: dict[str, float], union_bound: float,
               conditions: dict[str, bool]) -> SimReport:
        total = self.run()
        units = self.cfg.trials * self.units_per_trial()
        report = SimReport(scheme=self.NAME,
                           errors=total["errors"],
                           units=units,
                           events={e: total[e] for e in self.EVENTS},
                           receivers={r: total[r] for r in self.RECEIVERS},
                           effective_rates=rates,
                           union_bound=union_bound,
                           conditions=conditions,
                           config=self.cfg.echo())
        logger.info("n=%d rates %s: error %.4f +/- %.4f over %d messages", self.n,
                    ", ".join(f"{k}={v:.4f}" for k, v in rates.items()),
                    report.error_rate, report.half_width, units, extra={"prefix": self.NAME})
        return report


class _SingleUser(_Scheme):
    NAME = "single"
    EVENTS = ("true_atypical", "rival")

    def __init__(self, ch: StateChannel, strategy_pmf: Pmf, cfg: SimConfig):
        super().__init__(cfg)
        self.ch = ch
        self.tables = strategy_tables(ch.x_size, ch.s_size)
        self.kernel = induced_strategy_channel(ch)
        if strategy_pmf.size != self.kernel.shape[0]:
            raise AxisError(f"Strategy pmf has {strategy_pmf.size} letters, "
                            f"the channel has {self.kernel.shape[0]} strategies")
        self.p_t = strategy_pmf
        self.count = cfg.message_count(cfg.rate)
        self.log_w = _log2_kernel(self.kernel)
        self.joint = (self.p_t.probs[:, None] * self.kernel).ravel()

    def codebook(self, rng):
        return Codebook({"u": self.p_t.sample(self.count * self.n, rng).reshape(self.count, self.n)})

    def trial(self, book, rng):
        u = book.words["u"]
        w = int(rng.integers(self.count))
        s = self.ch.state_pmf.sample(self.n, rng)
        x = self.tables[u[w], s]
        y = _draw(self.ch.kernel[x, s], rng)

        outcome: Counter = Counter()
        if self.ml:
            decoded, rival = _ml(self.log_w[u, y[None, :]].sum(axis=1), w, rng)
            outcome["rival"] += rival
        else:
            mask = _typical_mask(u * self.kernel.shape[1] + y[None, :], self.joint, self.cfg.epsilon)
            decoded = _unique(mask)
            outcome["true_atypical"] += not mask[w]
            outcome["rival"] += bool(np.delete(mask, w).any())
        outcome["errors"] += decoded != w
        return outcome


def simulate_single_user(ch: StateChannel,
                         strategy_pmf: Union[Pmf, np.ndarray],
                         cfg: SimConfig) -> SimReport:
    """ Strategy coding over a single-user channel with causal state. """
    if not isinstance(strategy_pmf, Pmf):
        strategy_pmf = Pmf(strategy_pmf)
    scheme = _SingleUser(ch, strategy_pmf, cfg)
    info = float(dmc_mutual_information(strategy_pmf.probs, scheme.kernel))
    slack = 0.0 if scheme.ml else 2 * cfg.epsilon
    union = _union_bound([(scheme.count - 1, info, slack)], cfg.blocklength)
    return scheme.report({"rate": cfg.effective_rate(scheme.count)}, union,
                         {"R < I(T;Y)": cfg.effective_rate(scheme.count) < info})


class _Broadcast(_Scheme):
    NAME = "bc"
    EVENTS = ("r2_true_atypical", "r2_wrong_cloud",
              "r1_true_atypical", "r1_wrong_cloud", "r1_wrong_satellite")
    RECEIVERS = ("receiver1", "receiver2")

    def __init__(self, ch: BroadcastStateChannel, p_u2: np.ndarray, p_t_given_u2: np.ndarray,
                 cfg: SimConfig):
        super().__init__(cfg)
        self.ch = ch
        self.tables = strategy_tables(ch.x_size, ch.s_size)
        kernel = induced_bc_strategy_channel(ch)
        self.w1, self.w2 = kernel.sum(axis=2), kernel.sum(axis=1)
        self.p_u2 = Pmf(p_u2)
        self.cond = np.asarray(p_t_given_u2, dtype=float)
        if self.cond.shape != (self.p_u2.size, self.w1.shape[0]):
            raise AxisError(f"p(t|u2) must have shape {(self.p_u2.size, self.w1.shape[0])}, "
                            f"got {self.cond.shape}")
        self.m1 = cfg.message_count(cfg.rate1)
        self.m2 = cfg.message_count(cfg.rate2)
        if self.m1 * self.m2 > cfg.cap:
            raise CapExceededError(f"{self.m1} x {self.m2} message pairs exceed the codebook cap {cfg.cap}")
        cloud2 = self.cond @ self.w2
        self.log_cloud2 = _log2_kernel(cloud2)
        self.log_w1 = _log2_kernel(self.w1)
        self.joint2 = (self.p_u2.probs[:, None] * cloud2).ravel()
        self.joint1 = (self.p_u2.probs[:, None, None] * self.cond[:, :, None] * self.w1[None]).ravel()

    def codebook(self, rng):
        u2 = self.p_u2.sample(self.m2 * self.n, rng).reshape(self.m2, self.n)
        return Codebook({"u2": u2, "u1": _conditional_codewords(self.cond, u2, self.m1, rng)})

    def trial(self, book, rng):
        u2, u1 = book.words["u2"], book.words["u1"]
        n_t, n_y1, n_y2 = self.w1.shape[0], self.w1.shape[1], self.w2.shape[1]
        w1, w2 = int(rng.integers(self.m1)), int(rng.integers(self.m2))
        s = self.ch.state_pmf.sample(self.n, rng)
        x = self.tables[u1[w2, w1], s]
        cell = _draw(self.ch.kernel[x, s].reshape(self.n, -1), rng)
        y1, y2 = np.divmod(cell, n_y2)

        outcome: Counter = Counter()
        truth = w2 * self.m1 + w1
        if self.ml:
            decoded2, rival2 = _ml(self.log_cloud2[u2, y2[None, :]].sum(axis=1), w2, rng)
            scores = self.log_w1[u1, y1[None, None, :]].sum(axis=2)
            decoded1, _ = _ml(scores, truth, rng)
            beats = scores >= scores[w2, w1]
            outcome["r2_wrong_cloud"] += rival2
            outcome["r1_wrong_cloud"] += bool(np.delete(beats, w2, axis=0).any())
            outcome["r1_wrong_satellite"] += bool(np.delete(beats[w2], w1).any())
        else:
            mask2 = _typical_mask(u2 * n_y2 + y2[None, :], self.joint2, self.cfg.epsilon)
            decoded2 = _unique(mask2)
            cells = ((u2[:, None, :] * n_t + u1) * n_y1 + y1).reshape(self.m2 * self.m1, self.n)
            mask1 = _typical_mask(cells, self.joint1, self.cfg.epsilon).reshape(self.m2, self.m1)
            decoded1 = _unique(mask1)
            outcome["r2_true_atypical"] += not mask2[w2]
            outcome["r2_wrong_cloud"] += bool(np.delete(mask2, w2).any())
            outcome["r1_true_atypical"] += not mask1[w2, w1]
            outcome["r1_wrong_cloud"] += bool(np.delete(mask1, w2, axis=0).any())
            outcome["r1_wrong_satellite"] += bool(np.delete(mask1[w2], w1).any())

        wrong1, wrong2 = decoded1 != truth, decoded2 != w2
        outcome["receiver1"] += wrong1
        outcome["receiver2"] += wrong2
        outcome["errors"] += wrong1 or wrong2
        return outcome


def simulate_bc(ch: BroadcastStateChannel,
                p_u2: np.ndarray,
                p_t_given_u2: np.ndarray,
                cfg: SimConfig) -> SimReport:
    """ Superposition coding over a physically degraded broadcast channel.
    Receiver 2 decodes the cloud from y2, receiver 1 decodes the pair from y1.
    """
    verdict = check_bc_degraded(ch)
    if not verdict:
        raise DegradednessError(f"Broadcast channel is not physically degraded: {verdict.describe()}")
    scheme = _Broadcast(ch, p_u2, p_t_given_u2, cfg)
    terms = bc_point_terms(ch, p_u2, p_t_given_u2)
    n, eps = cfg.blocklength, (0.0 if scheme.ml else cfg.epsilon)
    r1, r2 = cfg.effective_rate(scheme.m1), cfg.effective_rate(scheme.m2)
    union = max(
        _union_bound([(scheme.m2 - 1, terms["I(U2;Y2)"], 2 * eps)], n),
        _union_bound([((scheme.m2 - 1) * scheme.m1, terms["I(T;Y1)"], 3 * eps),
                      (scheme.m1 - 1, terms["I(T;Y1|U2)"], 3 * eps)], n))
    conditions = {"R1 < I(T;Y1|U2)": r1 < terms["I(T;Y1|U2)"],
                  "R2 < I(U2;Y2)": r2 < terms["I(U2;Y2)"]}
    return scheme.report({"rate1": r1, "rate2": r2}, union, conditions)


class _Relay(_Scheme):
    NAME = "relay"
    EVENTS = ("relay_stage", "bin_stage", "within_bin_stage")

    def __init__(self, ch: RelayStateChannel, q: JointPmf, cfg: SimConfig):
        super().__init__(cfg)
        if cfg.blocks < 2:
            raise ValueError(f"Block-Markov coding needs at least 2 blocks, got {cfg.blocks}")
        self.ch = ch
        self.tables = strategy_tables(ch.x_size, ch.s_size)
        self.tables1 = strategy_tables(ch.x1_size, ch.s_size)
        tensor = relay_strategy_tensor(ch)
        n_t, n_t1 = tensor.shape[:2]
        if q.axes != ("T", "T1") or q.probs.shape != (n_t, n_t1):
            raise AxisError(f"Input law must be on axes ('T', 'T1') with shape {(n_t, n_t1)}, "
                            f"got {q.axes} {q.probs.shape}")
        self.q = q.probs
        self.q1 = self.q.sum(axis=0)
        self.cond = _conditional(self.q.T)            # p(t|t1)
        p_s = ch.state_pmf.probs
        w_y = np.einsum("absyz,s->aby", tensor, p_s)   # p(y|t,t1)
        v = tensor.sum(axis=3)                         # p(y1|t,t1,s)
        cloud = np.einsum("ba,aby->by", self.cond, w_y)  # p(y|t1)
        self.log_v, self.log_wy, self.log_cloud = _log2_kernel(v), _log2_kernel(w_y), _log2_kernel(cloud)
        self.shape_relay = v.shape
        self.shape_within = w_y.shape
        self.joint_relay = (self.q[:, :, None, None] * p_s[None, None, :, None] * v).ravel()
        self.joint_bin = (self.q1[:, None] * cloud).ravel()
        self.joint_within = (self.q[:, :, None] * w_y).ravel()
        self.m = cfg.message_count(cfg.rate)
        self.bins = cfg.message_count(cfg.rate0)
        if self.m * self.bins > cfg.cap:
            raise CapExceededError(f"{self.bins} bins x {self.m} messages exceed the codebook cap {cfg.cap}")

    def units_per_trial(self) -> int:
        return self.cfg.blocks - 1

    def codebook(self, rng):
        u1 = rng.choice(self.q1.size, size=(self.bins, self.n), p=self.q1)
        u = _conditional_codewords(self.cond, u1, self.m, rng)
        if self.cfg.binning == "balanced":
            bin_of = np.empty(self.m, dtype=np.intp)
            bin_of[rng.permutation(self.m)] = np.arange(self.m) % self.bins
        else:
            bin_of = rng.integers(self.bins, size=self.m)
        return Codebook({"u1": u1, "u": u}, bin_of)

    def _decode_relay(self, u, u1, s, y1, w, rng) -> tuple[int, bool]:
        if self.m == 1:
            return 0, False
        if self.ml:
            return _ml(self.log_v[u, u1[None, :], s[None, :], y1[None, :]].sum(axis=1), w, rng)
        cells = np.ravel_multi_index((u, np.broadcast_to(u1, u.shape), np.broadcast_to(s, u.shape),
                                      np.broadcast_to(y1, u.shape)), self.shape_relay)
        mask = _typical_mask(cells, self.joint_relay, self.cfg.epsilon)
        return _unique(mask), False

    def _decode_bin(self, u1, y, t, rng) -> int:
        if self.ml:
            return _ml(self.log_cloud[u1, y[None, :]].sum(axis=1), t, rng)[0]
        return _unique(_typical_mask(u1 * self.log_cloud.shape[1] + y[None, :],
                                     self.joint_bin, self.cfg.epsilon))

    def _decode_within(self, u, u1, y, members, w, rng) -> int:
        words = u[members]
        if self.ml:
            truth = int(np.searchsorted(members, w)) if w in members else 0
            k = _ml(self.log_wy[words, u1[None, :], y[None, :]].sum(axis=1), truth, rng)[0]
        else:
            cells = np.ravel_multi_index((words, np.broadcast_to(u1, words.shape),
                                          np.broadcast_to(y, words.shape)), self.shape_within)
            k = _unique(_typical_mask(cells, self.joint_within, self.cfg.epsilon))
        return int(members[k]) if k >= 0 else -1

    def trial(self, book, rng):
        u1_book, u_book, bin_of = book.words["u1"], book.words["u"], book.bin_of
        blocks = self.cfg.blocks
        # the last block carries a fixed known message, block 1 uses bin 0
        messages = np.append(rng.integers(self.m, size=blocks - 1), 0)
        bins = np.concatenate([[0], bin_of[messages[:-1]]])
        relay_bins = [0]
        outputs, outcome = [], Counter()

        for b in range(blocks):
            s = self.ch.state_pmf.sample(self.n, rng)
            x = self.tables[u_book[bins[b], messages[b]], s]
            x1 = self.tables1[u1_book[relay_bins[b]], s]
            cell = _draw(self.ch.kernel[x, x1, s].reshape(self.n, -1), rng)
            y, y1 = np.divmod(cell, self.ch.y1_size)
            outputs.append(y)
            if b < blocks - 1:
                estimate, _ = self._decode_relay(u_book[relay_bins[b]], u1_book[relay_bins[b]],
                                                 s, y1, int(messages[b]), rng)
                outcome["relay_stage"] += estimate != messages[b]
                relay_bins.append(int(bin_of[estimate]) if estimate >= 0 else 0)

        for b in range(1, blocks):
            t_hat = self._decode_bin(u1_book, outputs[b], int(bins[b]), rng)
            wrong_bin = t_hat != bins[b]
            outcome["bin_stage"] += wrong_bin
            members = np.flatnonzero(bin_of == t_hat) if t_hat >= 0 else np.array([], dtype=np.intp)
            w_true = int(messages[b - 1])
            decoded = -1
            if self.m == 1:
                decoded = 0
            elif members.size:
                # the receiver already knows the previous bin index t(b-1)
                decoded = self._decode_within(u_book[bins[b - 1]], u1_book[bins[b - 1]],
                                              outputs[b - 1], members, w_true, rng)
            wrong = decoded != w_true
            outcome["within_bin_stage"] += wrong and not wrong_bin
            outcome["errors"] += wrong
        return outcome


def simulate_relay(ch: RelayStateChannel, q: JointPmf, cfg: SimConfig) -> SimReport:
    """ Block-Markov decode-and-forward over B blocks carrying B-1 messages.
    The error rate is per message.
    """
    verdict = check_relay_degraded(ch)
    if not verdict:
        raise DegradednessError(f"Relay channel is not physically degraded: {verdict.describe()}")
    scheme = _Relay(ch, q, cfg)
    terms = relay_rate_terms(ch, q)
    n, eps = cfg.blocklength, (0.0 if scheme.ml else cfg.epsilon)
    rate, rate0 = cfg.effective_rate(scheme.m), cfg.effective_rate(scheme.bins)
    union = _union_bound([(scheme.m - 1, terms["I(T;Y1|T1,S)"], 3 * eps),
                          (scheme.bins - 1, terms["I(T1;Y)"], 2 * eps),
                          (scheme.m / scheme.bins, terms["I(T;Y|T1)"], 3 * eps)], n)
    conditions = {"R < I(T;Y1|T1,S)": rate < terms["I(T;Y1|T1,S)"],
                  "R0 < I(T1;Y)": rate0 < terms["I(T1;Y)"],
                  "R < I(T;Y|T1) + R0": rate < terms["I(T;Y|T1)"] + rate0}
    return scheme.report({"rate": rate, "rate0": rate0}, union, conditions)


class _MultipleAccess(_Scheme):
    NAME = "mac"
    EVENTS = ("true_atypical", "wrong_w1", "wrong_w2", "wrong_both")

    def __init__(self, ch: MACStateChannel, p_t1: Pmf, p_t2: Pmf, cfg: SimConfig):
        super().__init__(cfg)
        self.ch = ch
        self.tables1 = strategy_tables(ch.x1_size, ch.s_size)
        self.tables2 = strategy_tables(ch.x2_size, ch.s_size)
        kernel = np.einsum("absy,s->aby", mac_strategy_tensor(ch), ch.state_pmf.probs)
        if (p_t1.size, p_t2.size) != kernel.shape[:2]:
            raise AxisError(f"Strategy pmfs have sizes {(p_t1.size, p_t2.size)}, "
                            f"the channel has {kernel.shape[:2]} strategies")
        self.p_t1, self.p_t2 = p_t1, p_t2
        self.kernel = kernel
        self.log_w = _log2_kernel(kernel)
        self.joint = (p_t1.probs[:, None, None] * p_t2.probs[None, :, None] * kernel).ravel()
        self.m1 = cfg.message_count(cfg.rate1)
        self.m2 = cfg.message_count(cfg.rate2)
        if self.m1 * self.m2 > cfg.cap:
            raise CapExceededError(f"{self.m1} x {self.m2} message pairs exceed the codebook cap {cfg.cap}")

    def codebook(self, rng):
        return Codebook({"u1": self.p_t1.sample(self.m1 * self.n, rng).reshape(self.m1, self.n),
                         "u2": self.p_t2.sample(self.m2 * self.n, rng).reshape(self.m2, self.n)})

    def trial(self, book, rng):
        u1, u2 = book.words["u1"], book.words["u2"]
        w1, w2 = int(rng.integers(self.m1)), int(rng.integers(self.m2))
        s = self.ch.state_pmf.sample(self.n, rng)
        x1 = self.tables1[u1[w1], s]
        x2 = self.tables2[u2[w2], s]
        y = _draw(self.ch.kernel[x1, x2, s], rng)

        outcome: Counter = Counter()
        truth = w1 * self.m2 + w2
        if self.ml:
            scores = self.log_w[u1[:, None, :], u2[None, :, :], y[None, None, :]].sum(axis=2)
            decoded, _ = _ml(scores, truth, rng)
            hits = scores >= scores[w1, w2]
        else:
            n_t2, n_y = self.kernel.shape[1:]
            cells = ((u1[:, None, :] * n_t2 + u2[None, :, :]) * n_y + y).reshape(-1, self.n)
            hits = _typical_mask(cells, self.joint, self.cfg.epsilon).reshape(self.m1, self.m2)
            decoded = _unique(hits)
            outcome["true_atypical"] += not hits[w1, w2]
        others1 = np.arange(self.m1) != w1
        others2 = np.arange(self.m2) != w2
        outcome["wrong_w1"] += bool(hits[others1, w2].any())
        outcome["wrong_w2"] += bool(hits[w1, others2].any())
        outcome["wrong_both"] += bool(hits[np.ix_(others1, others2)].any())
        outcome["errors"] += decoded != truth
        return outcome


def simulate_mac(ch: MACStateChannel,
                 p_t1: Union[Pmf, np.ndarray],
                 p_t2: Union[Pmf, np.ndarray],
                 cfg: SimConfig) -> SimReport:
    """ Independent strategy codebooks, joint decoding of the message pair. """
    p_t1 = p_t1 if isinstance(p_t1, Pmf) else Pmf(p_t1)
    p_t2 = p_t2 if isinstance(p_t2, Pmf) else Pmf(p_t2)
    scheme = _MultipleAccess(ch, p_t1, p_t2, cfg)
    joint = induced_mac_joint(ch, JointPmf(("T1", "T2"), np.outer(p_t1.probs, p_t2.probs)))
    i1 = mutual_information(joint, {"T1"}, {"Y"}, {"T2"})
    i2 = mutual_information(joint, {"T2"}, {"Y"}, {"T1"})
    i_sum = mutual_information(joint, {"T1", "T2"}, {"Y"})
    n, eps = cfg.blocklength, (0.0 if scheme.ml else cfg.epsilon)
    r1, r2 = cfg.effective_rate(scheme.m1), cfg.effective_rate(scheme.m2)
    union = _union_bound([(scheme.m1 - 1, i1, 3 * eps), (scheme.m2 - 1, i2, 3 * eps),
                          ((scheme.m1 - 1) * (scheme.m2 - 1), i_sum, 4 * eps)], n)
    conditions = {"R1 < I(T1;Y|T2)": r1 < i1, "R2 < I(T2;Y|T1)": r2 < i2,
                  "R1 + R2 < I(T1,T2;Y)": r1 + r2 < i_sum}
    return scheme.report({"rate1": r1, "rate2": r2}, union, conditions)
