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

from typing import Optional


class AxisError(ValueError):
    """ Unknown, duplicated or overlapping axis names, or a shape mismatch. """


class FactorGraphError(ValueError):
    """ A factor list that cannot be assembled into a joint pmf. """


class InconsistencyError(ArithmeticError):
    """ A functional came out negative beyond floating-point rounding. """


class ChannelValidationError(ValueError):
    """ Channel tables that violate the model invariants. """


class DegradednessError(ChannelValidationError):
    """ Channel is not physically degraded. """


class CapExceededError(ValueError):
    """ Instance too large for exhaustive enumeration. """


class ChannelSpecError(ValueError):
    """ Channel specification file could not be parsed. """
    def __init__(self, message: str,
                 field: Optional[str] = None,
                 line: Optional[int] = None):
        self.field = field
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field '{field}'")
        if where:
            message = f"{', '.join(where)}: {message}"
        super().__init__(message)


class ModelMismatchError(ValueError):
    """ Channel model does not fit the requested command. """
