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
Channel specification files.

A channel file is a JSON document:

    {
      "model": "single" | "bc" | "relay" | "mac",
      "name": "optional short name",
      "comment": "optional free text",
      "alphabets": {"x": 2, "s": 2, "y": 2},
      "state_pmf": [0.5, 0.5],
      "kernel": {"index": ["x", "s", "y"], "table": [... row-major ...]}
    }

The kernel index must list the model's axes in the model's order; the
last output axes vary fastest. Rows off by at most 1e-9 are normalized on
load, larger deviations are left for validation to report.
"""

import json
import math
import os
from dataclasses import dataclass
from typing import Union

import numpy as np

from capstate.channels import (BroadcastStateChannel, MACStateChannel, RelayStateChannel,
                               StateChannel)
from capstate.probcore import PROB_TOL
from capstate.utils.errors import ChannelSpecError
from capstate.utils.tools import logger

NORMALIZE_SLACK = 1e-9

MODELS = {
    "single": StateChannel,
    "bc": BroadcastStateChannel,
    "relay": RelayStateChannel,
    "mac": MACStateChannel,
}

AnyChannel = Union[StateChannel, BroadcastStateChannel, RelayStateChannel, MACStateChannel]


@dataclass(frozen=True, eq=False)
class RawChannel:
    """ Parsed but not yet validated channel file. """
    model: str
    name: str
    comment: str
    state_pmf: np.ndarray
    kernel: np.ndarray
    normalized_rows: int = 0

    @property
    def axes(self) -> tuple[str, ...]:
        return MODELS[self.model].KERNEL_AXES

    @property
    def condition_axes(self) -> tuple[str, ...]:
        cls = MODELS[self.model]
        return cls.KERNEL_AXES[:cls.N_COND]

    def build(self) -> AnyChannel:
        """ Channel object; raises ChannelValidationError on invalid tables. """
        return MODELS[self.model](self.kernel, self.state_pmf, self.name)


def _require(doc: dict, key: str, kind, field: str):
    if key not in doc:
        raise ChannelSpecError("missing", field)
    value = doc[key]
    if not isinstance(value, kind):
        raise ChannelSpecError(f"expected {getattr(kind, '__name__', kind)}, got {type(value).__name__}", field)
    return value


def _numbers(values: list, field: str) -> np.ndarray:
    for i, v in enumerate(values):
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            raise ChannelSpecError(f"entry {i} is not a finite number: {v!r}", field)
    return np.array(values, dtype=float)


def _normalize_rows(table: np.ndarray, n_cond: int) -> tuple[np.ndarray, int]:
    rows = table.reshape(int(np.prod(table.shape[:n_cond], dtype=int)), -1).copy()
    deviation = np.abs(rows.sum(axis=1) - 1.0)
    fix = (deviation > PROB_TOL) & (deviation <= NORMALIZE_SLACK) & np.all(rows >= 0, axis=1)
    rows[fix] /= rows[fix].sum(axis=1, keepdims=True)
    return rows.reshape(table.shape), int(fix.sum())


def parse_document(doc) -> RawChannel:
    """ Check the fields of a decoded channel document. """
    if not isinstance(doc, dict):
        raise ChannelSpecError("top level must be an object")
    model = _require(doc, "model", str, "model")
    if model not in MODELS:
        raise ChannelSpecError(f"unknown model '{model}', expected one of {sorted(MODELS)}", "model")
    cls = MODELS[model]
    name = doc.get("name", "")
    comment = doc.get("comment", "")
    if not isinstance(name, str) or not isinstance(comment, str):
        raise ChannelSpecError("must be a string", "name" if not isinstance(name, str) else "comment")

    alphabets = _require(doc, "alphabets", dict, "alphabets")
    sizes = {}
    for axis in cls.KERNEL_AXES:
        size = alphabets.get(axis)
        if isinstance(size, bool) or not isinstance(size, int) or size < 1:
            raise ChannelSpecError(f"alphabet size must be a positive integer, got {size!r}",
                                   f"alphabets.{axis}")
        sizes[axis] = size
    extra = set(alphabets) - set(cls.KERNEL_AXES)
    if extra:
        raise ChannelSpecError(f"unexpected alphabets {sorted(extra)} for model '{model}'", "alphabets")

    state = _numbers(_require(doc, "state_pmf", list, "state_pmf"), "state_pmf")
    if state.size != sizes["s"]:
        raise ChannelSpecError(f"{state.size} entries for a state alphabet of size {sizes['s']}", "state_pmf")

    kernel_doc = _require(doc, "kernel", dict, "kernel")
    index = _require(kernel_doc, "index", list, "kernel.index")
    if tuple(index) != cls.KERNEL_AXES:
        raise ChannelSpecError(f"index must be {list(cls.KERNEL_AXES)} for model '{model}', got {index}",
                               "kernel.index")
    table = _numbers(_require(kernel_doc, "table", list, "kernel.table"), "kernel.table")
    shape = tuple(sizes[a] for a in cls.KERNEL_AXES)
    if table.size != int(np.prod(shape)):
        raise ChannelSpecError(f"{table.size} entries, expected {int(np.prod(shape))} for shape {shape}",
                               "kernel.table")

    state, fixed_state = _normalize_rows(state.reshape(1, -1), 1)
    kernel, fixed = _normalize_rows(table.reshape(shape), cls.N_COND)
    if fixed or fixed_state:
        logger.info("Normalized %d rows within %.0e of unit mass", fixed + fixed_state, NORMALIZE_SLACK,
                    extra={"prefix": model})
    return RawChannel(model, name, comment, state.ravel(), kernel, fixed + fixed_state)


def read_raw(path: str) -> RawChannel:
    if not os.path.exists(path):
        raise FileNotFoundError(f"Channel file {path} not found")
    with open(path, encoding="utf-8") as f:
        text = f.read()
    return parse_text(text)


def parse_text(text: str) -> RawChannel:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ChannelSpecError(e.msg, line=e.lineno) from None
    return parse_document(doc)


def read_channel(path: str) -> AnyChannel:
    """ Parse and validate a channel file. """
    raw = read_raw(path)
    channel = raw.build()
    logger.debug("Loaded %s channel '%s' with kernel shape %s", raw.model, raw.name,
                 channel.kernel.shape, extra={"prefix": raw.model})
    return channel


def canonical_text(channel: AnyChannel, comment: str = "") -> str:
    """ Canonical serialization; parses back to a bit-identical channel. """
    cls = type(channel)
    model = next(tag for tag, c in MODELS.items() if c is cls)
    doc = {
        "model": model,
        "name": channel.name,
        "comment": comment,
        "alphabets": {axis: channel.size(axis) for axis in cls.KERNEL_AXES},
        "state_pmf": [float(p) for p in channel.state_pmf.probs],
        "kernel": {"index": list(cls.KERNEL_AXES),
                   "table": [float(p) for p in channel.kernel.ravel()]},
    }
    return json.dumps(doc, indent=2) + "\n"


def write_channel(channel: AnyChannel, path: str, comment: str = "") -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(canonical_text(channel, comment))
    logger.info("Wrote canonical channel file %s", path)
