# Copyright 2026 The epfind Authors
# SPDX-License-Identifier: Apache-2.0
"""Locate eigenvalue degeneracies of parameter-dependent matrices.

Thin re-export of the compiled core; see the C++ headers for the contracts.
"""

from epfind._core import *  # noqa: F401,F403
from epfind._core import __doc__ as _core_doc

__doc__ = _core_doc
__version__ = "0.1.0"
