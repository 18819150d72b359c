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
Exact discrete probability: labeled joint pmfs, entropy and mutual information.

All functionals are in bits, with 0 log 0 = 0. Values are immutable after
construction, every function here is pure.
"""

import string
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from capstate.utils.errors import AxisError, FactorGraphError, InconsistencyError

PROB_TOL = 1e-12
MI_CLAMP = 1e-10


def _frozen(arr) -> np.ndarray:
    out = np.array(arr, dtype=float)
    out.setflags(write=False)
    return out


def xlog2x(p: np.ndarray) -> np.ndarray:
    """ Elementwise p*log2(p) with the 0 log 0 = 0 convention. """
    p = np.asarray(p, dtype=float)
    out = np.zeros_like(p)
    mask = p > 0
    out[mask] = p[mask] * np.log2(p[mask])
    return out


def entropy_along(p: np.ndarray, axis: int = -1) -> np.ndarray:
    """ Entropy in bits of every pmf stored along `axis`. """
    return -np.sum(xlog2x(p), axis=axis)


def binary_entropy(p: float) -> float:
    """ h(p) in bits. """
    return float(entropy_along(np.array([p, 1.0 - p])))


@dataclass(frozen=True, eq=False)
class Pmf:
    """ Probability vector over a finite alphabet. """
    probs: np.ndarray

    def __post_init__(self):
        probs = _frozen(self.probs)
        if probs.ndim != 1 or probs.size == 0:
            raise AxisError(f"Pmf must be a non-empty vector, got shape {probs.shape}")
        if np.any(probs < 0):
            raise ValueError(f"Pmf has negative entries: {probs}")
        if abs(probs.sum() - 1.0) > PROB_TOL:
            raise ValueError(f"Pmf sums to {probs.sum():.15f}, not 1")
        object.__setattr__(self, "probs", probs)

    @classmethod
    def uniform(cls, size: int) -> "Pmf":
        return cls(np.full(size, 1.0 / size))

    @classmethod
    def point(cls, size: int, index: int) -> "Pmf":
        probs = np.zeros(size)
        probs[index] = 1.0
        return cls(probs)

    @property
    def size(self) -> int:
        return self.probs.size

    def __len__(self) -> int:
        return self.size

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return rng.choice(self.size, size=n, p=self.probs)


@dataclass(frozen=True, eq=False)
class JointPmf:
    """ Dense joint pmf with one named axis per random variable. """
    axes: tuple[str, ...]
    probs: np.ndarray

    def __post_init__(self):
        axes = tuple(self.axes)
        probs = _frozen(self.probs)
        if len(set(axes)) != len(axes):
            raise AxisError(f"Axis names must be unique: {axes}")
        if probs.ndim != len(axes):
            raise AxisError(f"{len(axes)} axes given for a tensor of shape {probs.shape}")
        if np.any(probs < 0):
            raise ValueError("Joint pmf has negative cells")
        if abs(probs.sum() - 1.0) > PROB_TOL:
            raise ValueError(f"Joint pmf has total mass {probs.sum():.15f}, not 1")
        object.__setattr__(self, "axes", axes)
        object.__setattr__(self, "probs", probs)

    @classmethod
    def from_pmf(cls, pmf: Pmf, name: str) -> "JointPmf":
        return cls((name,), pmf.probs)

    @property
    def shape(self) -> dict[str, int]:
        return dict(zip(self.axes, self.probs.shape))

    def index(self, name: str) -> int:
        try:
            return self.axes.index(name)
        except ValueError:
            raise AxisError(f"Unknown axis '{name}', joint has {self.axes}") from None

    def marginal(self, names: Sequence[str]) -> "JointPmf":
        """ Marginal on `names`, axes ordered as requested. """
        names = tuple(names)
        if len(set(names)) != len(names):
            raise AxisError(f"Repeated axis in {names}")
        keep = [self.index(n) for n in names]
        drop = tuple(i for i in range(len(self.axes)) if i not in keep)
        probs = self.probs.sum(axis=drop) if drop else self.probs
        # summed axes keep their relative order; permute to the requested one
        remaining = [i for i in range(len(self.axes)) if i in keep]
        perm = [remaining.index(i) for i in keep]
        return JointPmf(names, np.transpose(probs, perm))

    def sample(self, n: int, rng: np.random.Generator) -> dict[str, np.ndarray]:
        """ Draw n i.i.d. tuples; returns one symbol sequence per axis. """
        flat = rng.choice(self.probs.size, size=n, p=self.probs.ravel())
        cells = np.unravel_index(flat, self.probs.shape)
        return {name: np.asarray(seq) for name, seq in zip(self.axes, cells)}


def _axis_sets(j: JointPmf, *groups: Iterable[str]) -> list[frozenset]:
    sets = []
    for group in groups:
        if isinstance(group, str):
            group = (group,)
        names = frozenset(group)
        for name in names:
            j.index(name)
        sets.append(names)
    for i in range(len(sets)):
        for k in range(i + 1, len(sets)):
            common = sets[i] & sets[k]
            if common:
                raise AxisError(f"Axis sets overlap on {sorted(common)}")
    return sets


def _joint_entropy(j: JointPmf, names: frozenset) -> float:
    if not names:
        return 0.0
    p = j.marginal(sorted(names, key=j.axes.index)).probs
    return float(entropy_along(p.ravel()))


def _clamp(value: float, what: str) -> float:
    if value < -MI_CLAMP:
        raise InconsistencyError(f"{what} evaluated to {value:.3e} bits")
    return max(value, 0.0)


def entropy(j: JointPmf,
            target: Iterable[str],
            given: Iterable[str] = ()) -> float:
    """ H(target|given) in bits. """
    target, given = _axis_sets(j, target, given)
    h = _joint_entropy(j, target | given) - _joint_entropy(j, given)
    return _clamp(h, "Conditional entropy")


def mutual_information(j: JointPmf,
                       a: Iterable[str],
                       b: Iterable[str],
                       given: Iterable[str] = ()) -> float:
    """ I(a;b|given) in bits; rounding noise below zero is clamped. """
    a, b, given = _axis_sets(j, a, b, given)
    value = (_joint_entropy(j, a | given) + _joint_entropy(j, b | given)
             - _joint_entropy(j, a | b | given) - _joint_entropy(j, given))
    return _clamp(value, "Mutual information")


class Factor(NamedTuple):
    """ Conditional kernel p(children|parents).
    The kernel tensor is indexed by parents first, then children.
    """
    kernel: np.ndarray
    parents: tuple[str, ...]
    children: tuple[str, ...]

    @classmethod
    def from_pmf(cls, pmf: Pmf, name: str) -> "Factor":
        return cls(pmf.probs, (), (name,))


def assemble_joint(factors: Sequence[Factor]) -> JointPmf:
    """ Multiply conditional kernels into the joint law they define.
    Factors may come in any order; each axis must be produced by exactly one factor.
    """
    producers: dict[str, int] = {}
    for i, factor in enumerate(factors):
        if not factor.children:
            raise FactorGraphError(f"Factor {i} produces no axis")
        for name in factor.children:
            if name in producers:
                raise FactorGraphError(f"Axis '{name}' is produced by factors "
                                       f"{producers[name]} and {i}")
            producers[name] = i
    for i, factor in enumerate(factors):
        for name in factor.parents:
            if name not in producers:
                raise FactorGraphError(f"Factor {i} depends on axis '{name}' that no factor produces")

    if len(producers) > len(string.ascii_letters):
        raise FactorGraphError(f"Too many axes ({len(producers)})")
    symbol = dict(zip(producers, string.ascii_letters))

    sizes: dict[str, int] = {}
    axes: list[str] = []
    tensor = np.ones(())
    pending = list(range(len(factors)))

    while pending:
        ready = [i for i in pending if all(p in sizes for p in factors[i].parents)]
        if not ready:
            raise FactorGraphError(f"Cyclic dependency among factors {pending}")
        for i in ready:
            factor = factors[i]
            kernel = np.asarray(factor.kernel, dtype=float)
            n_par = len(factor.parents)
            if kernel.ndim != n_par + len(factor.children):
                raise FactorGraphError(f"Factor {i}: kernel has {kernel.ndim} dimensions, "
                                       f"expected {n_par + len(factor.children)}")
            expected = tuple(sizes[p] for p in factor.parents)
            if kernel.shape[:n_par] != expected:
                raise FactorGraphError(f"Factor {i}: parent dimensions {kernel.shape[:n_par]} "
                                       f"do not match {expected}")
            rows = kernel.reshape(int(np.prod(expected, dtype=int)), -1)
            sums = rows.sum(axis=1)
            bad = np.flatnonzero((np.abs(sums - 1.0) > PROB_TOL) | np.any(rows < 0, axis=1))
            if bad.size:
                row = np.unravel_index(bad[0], expected) if expected else ()
                raise FactorGraphError(f"Factor {i}: non-stochastic kernel row {tuple(map(int, row))} "
                                       f"(sum {sums[bad[0]]:.15f})")

            lhs = "".join(symbol[a] for a in axes)
            rhs = "".join(symbol[a] for a in factor.parents + factor.children)
            out = lhs + "".join(symbol[c] for c in factor.children)
            tensor = np.einsum(f"{lhs},{rhs}->{out}", tensor, kernel)
            for name, size in zip(factor.children, kernel.shape[n_par:]):
                sizes[name] = size
                axes.append(name)
            pending.remove(i)

    return JointPmf(tuple(axes), tensor)
