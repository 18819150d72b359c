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

import numpy as np
from scipy.spatial import ConvexHull, QhullError

ORIGIN = -1


def _hull_vertices(augmented: np.ndarray) -> np.ndarray:
    try:
        return ConvexHull(augmented).vertices
    except QhullError:
        # nearly flat point sets: joggle the input, vertex indices stay valid
        return ConvexHull(augmented, qhull_options="QJ").vertices


def downward_closed_boundary(points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """ Upper-right boundary of the convex hull of `points`, their projections
    onto both axes and the origin.

    Returns (vertices, sources): boundary vertices ordered by the first coordinate
    ascending (ties by the second descending), from the vertical axis to the
    horizontal one, and for each vertex the index of the point it comes from
    (ORIGIN for the origin itself).
    """
    points = np.maximum(np.asarray(points, dtype=float).reshape(-1, 2), 0.0)
    n = points.shape[0]
    if n == 0:
        return np.zeros((1, 2)), np.array([ORIGIN])

    top = int(np.lexsort((-points[:, 0], -points[:, 1]))[0])    # max r2, then max r1
    right = int(np.lexsort((-points[:, 1], -points[:, 0]))[0])  # max r1, then max r2
    x_max, y_max = points[right, 0], points[top, 1]

    if x_max == 0.0 and y_max == 0.0:
        return np.zeros((1, 2)), np.array([ORIGIN])
    if y_max == 0.0:
        return np.array([[0.0, 0.0], [x_max, 0.0]]), np.array([ORIGIN, right])
    if x_max == 0.0:
        return np.array([[0.0, y_max], [0.0, 0.0]]), np.array([top, ORIGIN])

    augmented = np.vstack([
        points,
        np.column_stack([points[:, 0], np.zeros(n)]),
        np.column_stack([np.zeros(n), points[:, 1]]),
        np.zeros((1, 2)),
    ])
    source = np.concatenate([np.arange(n), np.arange(n), np.arange(n), [ORIGIN]])
    vertices = [v for v in _hull_vertices(augmented)
                if augmented[v, 0] > 0 or augmented[v, 1] > 0]
    vertices.sort(key=lambda v: (augmented[v, 0], -augmented[v, 1]))
    return augmented[vertices], source[vertices]


def polygon_contains(chain: np.ndarray, point: np.ndarray, margin: float) -> bool:
    """ Is `point` inside the downward-closed region whose upper-right boundary
    (ordered by the first coordinate) is `chain`, up to `margin`?
    """
    p = np.maximum(np.asarray(point, dtype=float), 0.0)
    chain = np.asarray(chain, dtype=float).reshape(-1, 2)
    x_max, y_max = chain[:, 0].max(), chain[:, 1].max()
    if p[0] > x_max + margin or p[1] > y_max + margin:
        return False
    # close the chain on both axes; traversal is clockwise so the inside is on the right
    path = np.vstack([[0.0, y_max], chain, [x_max, 0.0]])
    for a, b in zip(path[:-1], path[1:]):
        edge = b - a
        length = float(np.hypot(edge[0], edge[1]))
        if length == 0.0:
            continue
        cross = edge[0] * (p[1] - a[1]) - edge[1] * (p[0] - a[0])
        if cross > margin * length:
            return False
    return True
