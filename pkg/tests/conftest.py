"""Shared test setup.

BLAS threading is pinned to one thread before numpy loads: the model's
matrices are small enough that thread fan-out only adds overhead, and
single-threaded runs keep the determinism checks strict.
"""

import os

for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
    os.environ.setdefault(_var, "1")
