"""Achievable rates under matched and mismatched decoding with finite-alphabet interference."""

from .channel import (
    FagciChannel,
    FullGaussian,
    GeneralizedGaussian,
    InterferenceDecomposition,
    Matched,
    PartialGaussian,
    log_metric,
    parse_metric,
    sample_output,
)
from .constellation import (
    Constellation,
    Decomposition,
    InvalidArgument,
    db_to_linear,
    decompose_pam,
    from_points,
    linear_to_db,
    make_standard,
    minkowski_sum,
    zero,
)
from .rates import (
    GaussHermite,
    MonteCarlo,
    RateEstimate,
    SSearch,
    gmi,
    gmi_approx,
    mutual_information,
    optimize_shape,
)

__version__ = "0.1.0"
