"""Backend selection for the hot kernels.

The compiled extension ``cloudeff._ckernels`` is used when it imports; set
``CLOUDEFF_KERNELS=python`` to force the numpy fallback.
"""

import os

from . import _pykernels

if os.environ.get("CLOUDEFF_KERNELS", "").lower() == "python":
    _impl = _pykernels
else:
    try:
        from . import _ckernels as _impl
    except ImportError:
        _impl = _pykernels

BACKEND = "python" if _impl is _pykernels else "compiled"
LOGIT_CLIP = _pykernels.LOGIT_CLIP

net_predict = _impl.net_predict
net_mse = _impl.net_mse
best_split = _impl.best_split
tree_apply = _impl.tree_apply


def available_backends():
    backends = {"python": _pykernels}
    try:
        from . import _ckernels
    except ImportError:
        pass
    else:
        backends["compiled"] = _ckernels
    return backends
