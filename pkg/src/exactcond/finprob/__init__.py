"""Exact finite probability: kernels, the ``.fin`` language and model evidence."""

from .kernels import (
    FinChannel, SubDist, SubKernel, channel_of_subkernel, channel_posterior, compose,
    conditioning_product, dist_kernel, identity, is_discardable, kernel_posterior,
    normalize_dist, point, proportional, rat, subkernel_of_channel, tensor, uniform,
)
from .lang import (
    BOOL, UNIT, EnumT, FinProgram, FinTypeError, ModeError, PairT, bernoulli, equiv_fin,
    eval_closed, eval_term, evidence_report, evidence_wrapper, model_evidence, parse_fin,
    pretty_fin, show_dist, typecheck_fin, values,
)
