"""Planar immersions with prescribed Jacobian determinant, curl, and boundary values."""

import warnings

# numba probes for TBB on first parallel launch and warns when it is too old; the
# workqueue/omp fallback is fine for our kernels.
warnings.filterwarnings("ignore", message="The TBB threading layer")

__version__ = "0.1.0"
