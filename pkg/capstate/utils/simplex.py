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

import math
from functools import lru_cache

import numpy as np


def project_simplex(v: np.ndarray) -> np.ndarray:
    """ Euclidean projection of every row (last axis) onto the probability simplex.
    Sort-based algorithm, vectorized over all leading axes.
    """
    v = np.asarray(v, dtype=float)
    shape = v.shape
    d = shape[-1]
    flat = v.reshape(-1, d)
    u = -np.sort(-flat, axis=1)
    css = np.cumsum(u, axis=1) - 1.0
    positive = u - css / np.arange(1, d + 1) > 0
    rho = d - 1 - np.argmax(positive[:, ::-1], axis=1)
    theta = css[np.arange(flat.shape[0]), rho] / (rho + 1)
    return np.maximum(flat - theta[:, None], 0.0).reshape(shape)


def lattice_size(dim: int, resolution: int) -> int:
    """ Number of pmfs on `dim` letters with denominators `resolution`. """
    return math.comb(resolution + dim - 1, dim - 1)


@lru_cache(maxsize=64)
def _compositions(dim: int, total: int) -> np.ndarray:
    if dim == 1:
        out = np.array([[total]], dtype=np.int64)
    else:
        blocks = []
        for first in range(total + 1):
            rest = _compositions(dim - 1, total - first)
            blocks.append(np.hstack([np.full((rest.shape[0], 1), first, dtype=np.int64), rest]))
        out = np.vstack(blocks)
    out.setflags(write=False)
    return out


def simplex_lattice(dim: int, resolution: int) -> np.ndarray:
    """ All pmfs on `dim` letters whose entries are multiples of 1/resolution,
    rows in ascending lexicographic order.
    """
    if dim < 1 or resolution < 1:
        raise ValueError(f"Invalid lattice: dim={dim}, resolution={resolution}")
    return _compositions(dim, resolution) / resolution


def finest_resolution(dims: list[int], budget: int, limit: int = 256) -> int:
    """ Largest resolution whose product lattice over `dims` fits the budget (at least 1). """
    best = 1
    for resolution in range(1, limit + 1):
        if math.prod(lattice_size(d, resolution) for d in dims) > budget:
            break
        best = resolution
    return best


def random_pmfs(rng: np.random.Generator, dim: int, count: int) -> np.ndarray:
    """ Uniform (flat Dirichlet) samples from the simplex, shape (count, dim). """
    return rng.dirichlet(np.ones(dim), size=count)
