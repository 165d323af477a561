"""Select the recurrence kernel implementation at import time.

The compiled ``_kernels`` extension is used when it imports; otherwise the
pure-Python ``_kernels_py`` module.  Setting ``CDKERNELS_PURE=1`` forces
the fallback.
"""

import os

from . import _kernels_py

if os.environ.get("CDKERNELS_PURE") == "1":
    kernels = _kernels_py
    COMPILED = False
else:
    try:
        from . import _kernels as kernels
    except ImportError:
        kernels = _kernels_py
        COMPILED = False
    else:
        COMPILED = True

BACKEND = "compiled" if COMPILED else "python"
