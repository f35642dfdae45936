"""Backend selection for the term-arithmetic kernels.

The compiled extension is preferred when present; the NumPy reference
implementation is the fallback. Set ``POSSUM_PURE=1`` to force the fallback
(useful for benchmarking, see ``benchmarks/bench_backends.py``).
"""

import os

from possum import _core_ref

if os.environ.get("POSSUM_PURE"):
    _impl = _core_ref
    BACKEND = "numpy"
else:
    try:
        from possum import _core_fast as _impl

        BACKEND = "cython"
    except ImportError:
        _impl = _core_ref
        BACKEND = "numpy"

mul_terms = _impl.mul_terms
eval_terms = _impl.eval_terms
combine_terms = _core_ref.combine_terms
