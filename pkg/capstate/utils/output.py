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

import csv
import json
import sys
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

from capstate import __version__
from capstate.utils.tools import logger


@dataclass
class RunManifest:
    """ Provenance header written in front of every output table. """
    command: str
    config: dict
    seed: Optional[int]
    version: str = __version__
    duration: float = 0.0
    started: float = field(default_factory=time.perf_counter, repr=False)

    def finish(self) -> None:
        self.duration = time.perf_counter() - self.started

    def lines(self) -> list[str]:
        return [
            "# capstate run manifest",
            f"# command: {self.command}",
            f"# version: {self.version}",
            f"# seed: {self.seed}",
            f"# config: {json.dumps(self.config, sort_keys=True, default=str)}",
            f"# duration_s: {self.duration:.3f}",
        ]


def _cell(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_table(rows: Sequence[dict], manifest: RunManifest, path: Optional[str] = None) -> None:
    """ Write rows as CSV after the manifest comment block.
    Columns follow first appearance across rows; rows keep their given order.
    """
    columns: list[str] = []
    for row in rows:
        columns += [key for key in row if key not in columns]

    manifest.finish()
    out = open(path, "w", newline="", encoding="utf-8") if path else sys.stdout
    try:
        for line in manifest.lines():
            out.write(line + "\n")
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell(row.get(c, "")) for c in columns])
    finally:
        if path:
            out.close()
    if path:
        logger.info("Wrote %d rows to %s", len(rows), path)
