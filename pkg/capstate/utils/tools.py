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

import logging
import os
import time
from functools import wraps

try:
    from memory_profiler import memory_usage
    HAS_MEMORY_PROFILER = True
except ImportError:
    HAS_MEMORY_PROFILER = False

DEBUG = os.getenv("CAPSTATE_DEBUG", "false").lower() in ("true", "1", "yes")


class PrefixFormatter(logging.Formatter):
    def format(self, record):
        prefix = getattr(record, "prefix", "")
        record.message = record.getMessage()

        if self.usesTime():
            record.asctime = self.formatTime(record, self.datefmt)

        if prefix:
            record.message = f"[{prefix}] {record.message}"

        return self.formatMessage(record)


logger = logging.getLogger(__name__)
fmt = PrefixFormatter(
    fmt='[%(levelname)s] %(asctime)s %(message)s',
    datefmt='%d-%m-%Y %H:%M:%S'
)

file_handler = logging.FileHandler("capstate.log", mode="a", encoding="utf-8")
file_handler.setLevel(logging.DEBUG)
file_handler.setFormatter(fmt)

stream_handler = logging.StreamHandler()
stream_handler.setLevel(logging.INFO)
stream_handler.setFormatter(fmt)

logger.setLevel(logging.DEBUG if DEBUG else logging.INFO)
logger.handlers = []  # Clear any existing handlers
logger.addHandler(file_handler)
logger.addHandler(stream_handler)


def env_int(name: str, default: int) -> int:
    """ Read an integer tunable from the environment. """
    value = os.getenv(name)
    if value in (None, ""):
        return default
    try:
        return int(value)
    except ValueError:
        logger.warning("Ignoring %s=%r, not an integer (using %d)", name, value, default)
        return default


def profile(fn):
    """ Decorator for profiling CLI commands.
    Reports wall time and, if memory_profiler is installed, peak memory growth.
    """
    @wraps(fn)
    def inner(*args, **kwargs):
        t0 = time.perf_counter()
        if HAS_MEMORY_PROFILER:
            mem_usage, retval = memory_usage((fn, args, kwargs), interval=0.1,
                                             retval=True, max_usage=False)
        else:
            retval = fn(*args, **kwargs)
        elapsed = time.perf_counter() - t0

        logger.debug("%s: time %.4f s", fn.__name__, elapsed)
        if HAS_MEMORY_PROFILER:
            logger.debug("%s: memory %.2f MB", fn.__name__, max(mem_usage) - min(mem_usage))
        return retval

    return inner
