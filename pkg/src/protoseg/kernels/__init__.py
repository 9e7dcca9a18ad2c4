"""Hot-kernel backend selection.

The compiled Cython extension is preferred when it was built; otherwise
the pure numpy fallback is used. Setting PROTOSEG_PURE=1 forces the
fallback, which is useful for testing and benchmarking.
"""

import os

from . import pure

_compiled = None
if os.environ.get("PROTOSEG_PURE", "") != "1":
    try:
        from . import _core as _compiled
    except ImportError:
        _compiled = None

_impl = _compiled if _compiled is not None else pure

BACKEND = "compiled" if _compiled is not None else "pure"

conv_out_size = pure.conv_out_size
im2col = _impl.im2col
col2im = _impl.col2im
bilinear_forward = _impl.bilinear_forward
bilinear_backward = _impl.bilinear_backward
count_components = _impl.count_components
interp_matrix = pure.interp_matrix
