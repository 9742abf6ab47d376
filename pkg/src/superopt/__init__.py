"""Matrix Laurent polynomial symbols on the unit circle and numeric certificates for
badly and very badly approximable matrix functions."""

from .laurent import (
    GridSampling,
    MatrixLaurentPoly,
    SingularProfile,
    eval_on_grid,
    fit,
    load_symbol,
    save_symbol,
    singular_profile,
    winding_number,
)
from .hankel import PolySubspaceBasis, hankel_matrix, hankel_norm, kernel_stabilize, toeplitz_kernel

__version__ = "0.1.0"
