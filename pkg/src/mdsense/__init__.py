"""Blind moment-based spectrum sensing under McLeish noise."""

from .detector import (
    DecisionOutcome,
    EdConfig,
    MdConfig,
    decision_statistic,
    delta_method_variance,
    ed_pd,
    ed_pf,
    ed_statistic,
    ed_threshold,
    md_pd,
    md_threshold,
    pf,
    sigma2_h0,
    sigma2_h1,
    t_h0,
    t_h1,
    test_statistic,
)
from .mcleish import DegenerateInputError, McLeishParams, fit_params, sample_ccs
from .moments import Hypothesis, MomentSet, RealMomentSet, SignalModel, abs_moments, real_moment_set

__version__ = "0.1.0"
