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

import os

import numpy as np

from capstate.channels import (BroadcastStateChannel, MACStateChannel, RelayStateChannel,
                               StateChannel)

EXAMPLES_DIR = os.path.join(os.path.dirname(os.path.dirname(__file__)), "examples")


def example_path(name: str) -> str:
    return os.path.join(EXAMPLES_DIR, name)


def bsc(p: float) -> np.ndarray:
    return np.array([[1 - p, p], [p, 1 - p]])


def xor_channel(q: float, noise: float = 0.0) -> StateChannel:
    """ Y = X xor S xor Z with S ~ Bern(q), Z ~ Bern(noise). """
    kernel = np.zeros((2, 2, 2))
    for x in range(2):
        for s in range(2):
            kernel[x, s] = bsc(noise)[x ^ s]
    return StateChannel(kernel, np.array([1 - q, q]), "xor")


def dummy_state_bsc(p: float, s_size: int = 2) -> StateChannel:
    kernel = np.repeat(bsc(p)[:, None, :], s_size, axis=1)
    return StateChannel(kernel, np.full(s_size, 1.0 / s_size), "bsc")


def useless_channel() -> StateChannel:
    return StateChannel(np.full((2, 2, 2), 0.5), np.array([0.5, 0.5]), "useless")


def bc_from_parts(first: np.ndarray, second: np.ndarray, state: np.ndarray) -> BroadcastStateChannel:
    """ Physically degraded broadcast channel p(y1|x,s) p(y2|y1). """
    return BroadcastStateChannel(np.einsum("xsa,ab->xsab", first, second), state)


def clean_bsc_bc(p: float = 0.1) -> BroadcastStateChannel:
    return bc_from_parts(np.eye(2)[:, None, :], bsc(p), np.array([1.0]))


def same_output_bc(base: StateChannel) -> BroadcastStateChannel:
    return bc_from_parts(base.kernel, np.eye(base.y_size), base.state_pmf.probs)


def non_degraded_bc() -> BroadcastStateChannel:
    """ Y1 = BSC(0.2) of X, Y2 = X: Y2 depends on X given Y1. """
    kernel = np.zeros((2, 1, 2, 2))
    for x in range(2):
        for y1 in range(2):
            kernel[x, 0, y1, x] = bsc(0.2)[x, y1]
    return BroadcastStateChannel(kernel, np.array([1.0]))


def random_degraded_bc(rng: np.random.Generator, x=2, s=2, y1=2, y2=2) -> BroadcastStateChannel:
    first = rng.dirichlet(np.ones(y1), size=(x, s))
    second = rng.dirichlet(np.ones(y2), size=y1)
    return bc_from_parts(first, second, rng.dirichlet(np.ones(s)))


def relay_from_parts(first: np.ndarray, second: np.ndarray, state: np.ndarray) -> RelayStateChannel:
    """ Physically degraded relay p(y1|x,x1,s) p(y|y1,x1,s), kernel [x, x1, s, y, y1]. """
    return RelayStateChannel(np.einsum("abcz,bczy->abcyz", first, second), state)


def two_hop_relay() -> RelayStateChannel:
    first = np.zeros((2, 2, 1, 2))
    second = np.zeros((2, 1, 2, 2))
    for x in range(2):
        first[x, :, 0, x] = 1.0      # Y1 = X
    for x1 in range(2):
        second[x1, 0, :, x1] = 1.0   # Y = X1
    return relay_from_parts(first, second, np.array([1.0]))


def noisy_two_hop_relay(p: float) -> RelayStateChannel:
    """ Y1 = BSC(p) of X, Y = BSC(p) of X1. """
    first = np.repeat(bsc(p)[:, None, None, :], 2, axis=1)
    second = np.repeat(bsc(p)[:, None, None, :], 2, axis=2)
    return relay_from_parts(first, second, np.array([1.0]))


def deaf_relay() -> RelayStateChannel:
    """ The relay hears X perfectly, Y is independent of everything. """
    first = np.zeros((2, 2, 1, 2))
    for x in range(2):
        first[x, :, 0, x] = 1.0
    second = np.full((2, 1, 2, 2), 0.5)
    return relay_from_parts(first, second, np.array([1.0]))


def direct_only_relay() -> RelayStateChannel:
    """ Y = X directly, Y1 pure noise: not degraded. """
    kernel = np.zeros((2, 2, 1, 2, 2))
    for x in range(2):
        kernel[x, :, 0, x, :] = 0.5
    return RelayStateChannel(kernel, np.array([1.0]))


def random_degraded_relay(rng: np.random.Generator, s=2) -> RelayStateChannel:
    first = rng.dirichlet(np.ones(2), size=(2, 2, s))
    second = rng.dirichlet(np.ones(2), size=(2, s, 2))
    return relay_from_parts(first, second, rng.dirichlet(np.ones(s)))


def adder_mac() -> MACStateChannel:
    kernel = np.zeros((2, 2, 1, 3))
    for a in range(2):
        for b in range(2):
            kernel[a, b, 0, a + b] = 1.0
    return MACStateChannel(kernel, np.array([1.0]), "adder")


def xor_mac(q: float = 0.5) -> MACStateChannel:
    """ Y = X1 xor X2 xor S. """
    kernel = np.zeros((2, 2, 2, 2))
    for a in range(2):
        for b in range(2):
            for s in range(2):
                kernel[a, b, s, a ^ b ^ s] = 1.0
    return MACStateChannel(kernel, np.array([1 - q, q]), "xor")


def noisy_xor_mac(noise: float) -> MACStateChannel:
    """ Y = X1 xor X2 xor Z with Z ~ Bern(noise), no state. """
    kernel = np.zeros((2, 2, 1, 2))
    for a in range(2):
        for b in range(2):
            kernel[a, b, 0] = bsc(noise)[a ^ b]
    return MACStateChannel(kernel, np.array([1.0]), "noisy-xor")


def single_sender_mac(base: StateChannel) -> MACStateChannel:
    """ Second sender with a one-letter input alphabet. """
    return MACStateChannel(base.kernel[:, None, :, :], base.state_pmf.probs)


def random_mac(rng: np.random.Generator, s=2) -> MACStateChannel:
    return MACStateChannel(rng.dirichlet(np.ones(2), size=(2, 2, s)), rng.dirichlet(np.ones(s)))


def random_state_channel(rng: np.random.Generator, x=2, s=2, y=2) -> StateChannel:
    return StateChannel(rng.dirichlet(np.ones(y), size=(x, s)), rng.dirichlet(np.ones(s)))
