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
Channel models with causal state at the transmitter(s).

A causal-state channel becomes an ordinary channel once a strategy
t: S -> X is put in front of it. Strategy letters are indexed by the
lexicographic order of their tables, so with |S| = 1 the strategy
alphabet coincides with the input alphabet.
"""

import itertools
from dataclasses import dataclass, field
from typing import ClassVar, Optional

import numpy as np

from capstate.probcore import PROB_TOL, Factor, JointPmf, Pmf, assemble_joint
from capstate.utils.errors import AxisError, CapExceededError, ChannelValidationError
from capstate.utils.tools import env_int, logger

DEFAULT_STRATEGY_CAP = 4096
DEGRADED_TOL = 1e-9


def strategy_cap(cap: Optional[int] = None) -> int:
    return cap or env_int("CAPSTATE_STRATEGY_CAP", DEFAULT_STRATEGY_CAP)


@dataclass(frozen=True, eq=False)
class Verdict:
    """ Outcome of a channel check.
    On failure `witness` holds the most violating cell, labeled by `witness_axes`.
    Degradedness checks put the recovered kernel in `kernel` on success.
    """
    check: str
    passed: bool
    residual: float = 0.0
    witness: Optional[tuple[int, ...]] = None
    witness_axes: tuple[str, ...] = ()
    kernel: Optional[np.ndarray] = field(default=None, repr=False)

    def __bool__(self) -> bool:
        return self.passed

    def describe(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        text = f"{status} {self.check}"
        if not self.passed and self.witness is not None:
            cell = ", ".join(f"{a}={v}" for a, v in zip(self.witness_axes, self.witness))
            text += f" at ({cell}), residual {self.residual:.3e}"
        return text


def check_stochastic(kernel: np.ndarray,
                     condition_axes: tuple[str, ...],
                     check: str = "stochastic rows",
                     tol: float = PROB_TOL) -> Verdict:
    """ Every conditional row of `kernel` (indexed by its leading
    `condition_axes`) must be nonnegative and sum to 1 within tol.
    """
    kernel = np.asarray(kernel, dtype=float)
    n_cond = len(condition_axes)
    cond_shape = kernel.shape[:n_cond]
    rows = kernel.reshape(int(np.prod(cond_shape, dtype=int)), -1)
    deviation = np.abs(rows.sum(axis=1) - 1.0)
    deviation[np.any(rows < 0, axis=1)] = np.inf
    worst = int(np.argmax(deviation))
    if deviation[worst] <= tol:
        return Verdict(check, True, float(deviation[worst]))
    witness = tuple(int(i) for i in np.unravel_index(worst, cond_shape))
    return Verdict(f"non-stochastic row ({check})", False, float(deviation[worst]),
                   witness, condition_axes)


class _Channel:
    """ Shared validation for the state-channel family.
    KERNEL_AXES names the kernel dimensions, the first N_COND of them are
    conditioning axes; S_AXIS points at the state dimension.
    """
    KERNEL_AXES: ClassVar[tuple[str, ...]]
    N_COND: ClassVar[int]
    S_AXIS: ClassVar[int]
    MODEL: ClassVar[str]

    kernel: np.ndarray
    state_pmf: Pmf
    name: str

    def _validate(self) -> None:
        kernel = np.array(self.kernel, dtype=float)
        if not isinstance(self.state_pmf, Pmf):
            object.__setattr__(self, "state_pmf", Pmf(self.state_pmf))
        if kernel.ndim != len(self.KERNEL_AXES):
            raise ChannelValidationError(
                f"{self.MODEL} kernel must be indexed by {self.KERNEL_AXES}, got shape {kernel.shape}")
        if kernel.shape[self.S_AXIS] != self.state_pmf.size:
            raise ChannelValidationError(
                f"State axis has {kernel.shape[self.S_AXIS]} letters, "
                f"state pmf has {self.state_pmf.size}")
        verdict = check_stochastic(kernel, self.KERNEL_AXES[:self.N_COND])
        if not verdict:
            raise ChannelValidationError(verdict.describe())
        kernel.setflags(write=False)
        object.__setattr__(self, "kernel", kernel)

    def size(self, axis: str) -> int:
        return self.kernel.shape[self.KERNEL_AXES.index(axis)]

    @property
    def s_size(self) -> int:
        return self.state_pmf.size


@dataclass(frozen=True, eq=False)
class StateChannel(_Channel):
    """ Single-user channel p(y|x,s), kernel indexed [x, s, y]. """
    kernel: np.ndarray
    state_pmf: Pmf
    name: str = ""

    KERNEL_AXES = ("x", "s", "y")
    N_COND = 2
    S_AXIS = 1
    MODEL = "single"

    def __post_init__(self):
        self._validate()

    @property
    def x_size(self) -> int:
        return self.kernel.shape[0]

    @property
    def y_size(self) -> int:
        return self.kernel.shape[2]


@dataclass(frozen=True, eq=False)
class BroadcastStateChannel(_Channel):
    """ Broadcast channel p(y1,y2|x,s), kernel indexed [x, s, y1, y2]. """
    kernel: np.ndarray
    state_pmf: Pmf
    name: str = ""

    KERNEL_AXES = ("x", "s", "y1", "y2")
    N_COND = 2
    S_AXIS = 1
    MODEL = "bc"

    def __post_init__(self):
        self._validate()

    @property
    def x_size(self) -> int:
        return self.kernel.shape[0]

    @property
    def y1_size(self) -> int:
        return self.kernel.shape[2]

    @property
    def y2_size(self) -> int:
        return self.kernel.shape[3]

    def receiver_channel(self, receiver: int) -> StateChannel:
        """ Marginal single-user channel seen by receiver 1 or 2. """
        if receiver not in (1, 2):
            raise ValueError(f"Receiver must be 1 or 2, got {receiver}")
        kernel = self.kernel.sum(axis=3 if receiver == 1 else 2)
        return StateChannel(kernel, self.state_pmf, name=f"{self.name}:y{receiver}")


@dataclass(frozen=True, eq=False)
class RelayStateChannel(_Channel):
    """ Relay channel p(y,y1|x,x1,s), kernel indexed [x, x1, s, y, y1]. """
    kernel: np.ndarray
    state_pmf: Pmf
    name: str = ""

    KERNEL_AXES = ("x", "x1", "s", "y", "y1")
    N_COND = 3
    S_AXIS = 2
    MODEL = "relay"

    def __post_init__(self):
        self._validate()

    @property
    def x_size(self) -> int:
        return self.kernel.shape[0]

    @property
    def x1_size(self) -> int:
        return self.kernel.shape[1]

    @property
    def y_size(self) -> int:
        return self.kernel.shape[3]

    @property
    def y1_size(self) -> int:
        return self.kernel.shape[4]


@dataclass(frozen=True, eq=False)
class MACStateChannel(_Channel):
    """ Multiple access channel p(y|x1,x2,s), kernel indexed [x1, x2, s, y]. """
    kernel: np.ndarray
    state_pmf: Pmf
    name: str = ""

    KERNEL_AXES = ("x1", "x2", "s", "y")
    N_COND = 3
    S_AXIS = 2
    MODEL = "mac"

    def __post_init__(self):
        self._validate()

    @property
    def x1_size(self) -> int:
        return self.kernel.shape[0]

    @property
    def x2_size(self) -> int:
        return self.kernel.shape[1]

    @property
    def y_size(self) -> int:
        return self.kernel.shape[3]


@dataclass(frozen=True)
class StrategyMap:
    """ Map t: S -> X applied in front of the channel. """
    table: tuple[int, ...]
    x_size: int

    def __post_init__(self):
        if any(x < 0 or x >= self.x_size for x in self.table):
            raise ValueError(f"Strategy {self.table} leaves the input alphabet of size {self.x_size}")

    def __call__(self, s: int) -> int:
        return self.table[s]

    def __str__(self) -> str:
        return "[" + ",".join(map(str, self.table)) + "]"


def strategy_tables(x_size: int, s_size: int, cap: Optional[int] = None) -> np.ndarray:
    """ All strategy tables as an integer array of shape (x_size**s_size, s_size),
    rows in lexicographic order.
    """
    if x_size < 1 or s_size < 1:
        raise ValueError(f"Alphabet sizes must be positive, got |X|={x_size}, |S|={s_size}")
    cap = strategy_cap(cap)
    count = x_size ** s_size
    if count > cap:
        raise CapExceededError(f"|X|^|S| = {x_size}^{s_size} = {count} strategies "
                               f"exceed the cap of {cap}")
    tables = np.array(list(itertools.product(range(x_size), repeat=s_size)), dtype=np.intp)
    return tables.reshape(count, s_size)


def enumerate_strategies(x_size: int, s_size: int, cap: Optional[int] = None) -> list[StrategyMap]:
    tables = strategy_tables(x_size, s_size, cap)
    return [StrategyMap(tuple(int(x) for x in row), x_size) for row in tables]


def induced_strategy_channel(ch: StateChannel, cap: Optional[int] = None) -> np.ndarray:
    """ Ordinary DMC p(y|t) = sum_s p(s) p(y|t(s),s), shape (|T|, |Y|). """
    tables = strategy_tables(ch.x_size, ch.s_size, cap)
    slices = ch.kernel[tables, np.arange(ch.s_size)[None, :], :]
    return np.einsum("tsy,s->ty", slices, ch.state_pmf.probs)


def induced_bc_strategy_channel(ch: BroadcastStateChannel, cap: Optional[int] = None) -> np.ndarray:
    """ p(y1,y2|t), shape (|T|, |Y1|, |Y2|). """
    tables = strategy_tables(ch.x_size, ch.s_size, cap)
    slices = ch.kernel[tables, np.arange(ch.s_size)[None, :], :, :]
    return np.einsum("tsab,s->tab", slices, ch.state_pmf.probs)


def relay_strategy_tensor(ch: RelayStateChannel, cap: Optional[int] = None) -> np.ndarray:
    """ p(y,y1|t(s),t1(s),s), shape (|T|, |T1|, |S|, |Y|, |Y1|). """
    tables = strategy_tables(ch.x_size, ch.s_size, cap)
    tables1 = strategy_tables(ch.x1_size, ch.s_size, cap)
    states = np.arange(ch.s_size)
    return ch.kernel[tables[:, None, :], tables1[None, :, :], states[None, None, :]]


def mac_strategy_tensor(ch: MACStateChannel, cap: Optional[int] = None) -> np.ndarray:
    """ p(y|t1(s),t2(s),s), shape (|T1|, |T2|, |S|, |Y|). """
    tables1 = strategy_tables(ch.x1_size, ch.s_size, cap)
    tables2 = strategy_tables(ch.x2_size, ch.s_size, cap)
    states = np.arange(ch.s_size)
    return ch.kernel[tables1[:, None, :], tables2[None, :, :], states[None, None, :]]


def _check_input_joint(q: JointPmf, names: tuple[str, str], sizes: tuple[int, int]) -> None:
    if q.axes != names:
        raise AxisError(f"Input law must have axes {names}, got {q.axes}")
    if q.probs.shape != sizes:
        raise AxisError(f"Input law has shape {q.probs.shape}, strategy alphabets are {sizes}")


def induced_relay_joint(ch: RelayStateChannel, q: JointPmf, cap: Optional[int] = None) -> JointPmf:
    """ Joint law q(t,t1) p(s) p(y,y1|t(s),t1(s),s) on axes (T, T1, S, Y1, Y). """
    tensor = relay_strategy_tensor(ch, cap)
    _check_input_joint(q, ("T", "T1"), tensor.shape[:2])
    joint = assemble_joint([
        Factor(q.probs, (), ("T", "T1")),
        Factor.from_pmf(ch.state_pmf, "S"),
        Factor(tensor, ("T", "T1", "S"), ("Y", "Y1")),
    ])
    return joint.marginal(("T", "T1", "S", "Y1", "Y"))


def induced_mac_joint(ch: MACStateChannel, p12: JointPmf, cap: Optional[int] = None) -> JointPmf:
    """ Joint law p(t1,t2) p(s) p(y|t1(s),t2(s),s) on axes (T1, T2, S, Y). """
    tensor = mac_strategy_tensor(ch, cap)
    _check_input_joint(p12, ("T1", "T2"), tensor.shape[:2])
    return assemble_joint([
        Factor(p12.probs, (), ("T1", "T2")),
        Factor.from_pmf(ch.state_pmf, "S"),
        Factor(tensor, ("T1", "T2", "S"), ("Y",)),
    ])


def _factorization_residual(cond_kernel: np.ndarray,
                            gate: np.ndarray,
                            tol: float) -> tuple[np.ndarray, float, Optional[tuple[int, int]]]:
    """ Core of both degradedness checks.
    cond_kernel[v, g, :] is p(out|v, g), gate[v, g] its conditioning probability;
    the conditional must not depend on v wherever gate > tol.
    Returns the recovered p(out|g), the largest deviation and its (v, g) cell.
    """
    n_v, n_g, n_out = cond_kernel.shape
    recovered = np.full((n_g, n_out), 1.0 / n_out)
    residual, witness = 0.0, None
    for g in range(n_g):
        active = np.flatnonzero(gate[:, g] > tol)
        if active.size == 0:
            continue  # vacuous: this conditioning cell is never reached
        cond = cond_kernel[active, g, :] / gate[active, g, None]
        reference = cond[int(np.argmax(gate[active, g]))]
        deviation = np.abs(cond - reference).max(axis=1)
        k = int(np.argmax(deviation))
        if deviation[k] > residual:
            residual, witness = float(deviation[k]), (int(active[k]), g)
        recovered[g] = reference
    return recovered, residual, witness


def check_bc_degraded(ch: BroadcastStateChannel, tol: float = DEGRADED_TOL) -> Verdict:
    """ Does p(y1,y2|x,s) factor as p(y1|x,s) p(y2|y1)?
    On PASS the verdict carries p(y2|y1), shape (|Y1|, |Y2|).
    """
    n_x, n_s, n_y1, n_y2 = ch.kernel.shape
    # v = (x, s), g = y1
    cond = ch.kernel.reshape(n_x * n_s, n_y1, n_y2)
    gate = cond.sum(axis=2)
    recovered, residual, cell = _factorization_residual(cond, gate, tol)
    passed = residual <= tol
    witness = None
    if cell is not None and not passed:
        x, s = divmod(cell[0], n_s)
        witness = (x, s, cell[1])
    logger.debug("BC degradedness residual %.3e", residual, extra={"prefix": "bc"})
    return Verdict("physically degraded p(y1|x,s)p(y2|y1)", passed, residual,
                   witness, ("x", "s", "y1"), recovered if passed else None)


def check_relay_degraded(ch: RelayStateChannel, tol: float = DEGRADED_TOL) -> Verdict:
    """ Does p(y,y1|x,x1,s) factor as p(y1|x,x1,s) p(y|y1,x1,s)?
    On PASS the verdict carries p(y|y1,x1,s), shape (|X1|, |S|, |Y1|, |Y|).
    """
    n_x, n_x1, n_s, n_y, n_y1 = ch.kernel.shape
    # v = x, g = (x1, s, y1)
    cond = np.moveaxis(ch.kernel, 3, 4).reshape(n_x, n_x1 * n_s * n_y1, n_y)
    gate = cond.sum(axis=2)
    recovered, residual, cell = _factorization_residual(cond, gate, tol)
    passed = residual <= tol
    witness = None
    if cell is not None and not passed:
        x1, s, y1 = np.unravel_index(cell[1], (n_x1, n_s, n_y1))
        witness = (cell[0], int(x1), int(s), int(y1))
    logger.debug("Relay degradedness residual %.3e", residual, extra={"prefix": "relay"})
    return Verdict("physically degraded p(y1|x,x1,s)p(y|y1,x1,s)", passed, residual,
                   witness, ("x", "x1", "s", "y1"),
                   recovered.reshape(n_x1, n_s, n_y1, n_y) if passed else None)
