"""Higher-rank signature kernels, signature MMDs and kernel regression over process laws."""

import os as _os

# Thread count for BLAS backends; must be set before numpy is first imported.
_threads = _os.environ.get("SIGSTOP_NUM_THREADS")
if _threads:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        _os.environ.setdefault(_var, _threads)

from .ckme import (EmbeddedEnsemble, LambdaSchedule, MMDEstimate, cond_kme_inner_products,
                   first_order_mmd, mmd_from_grams, rank_r_gram, second_order_gram,
                   second_order_mmd)
from .errors import ConfigError, NumericalError
from .goursat import GramTensor, first_order_gram, pde_solve, truncated_sig_kernel
from .paths import (Ensemble, Path, TimeGrid, augment_ensemble, augment_time, build_grid,
                    increment_matrix, restrict, scale_values)

__version__ = "0.1.0"
