# flake8: noqa: F401
# noreorder
"""
gkit: Grothendieck-bounded bilinear and multilinear functionals at desk scale.
"""
__title__ = "gkit"
__license__ = "The Unlicense (Unlicense)"

from gkit.version import __version__
from gkit.constants import Constants
from gkit.spaces import (
    BilinearForm,
    CertMethod,
    NormCertificate,
    NormTag,
    SpaceSpec,
    TensorElement,
    bilinear_norm,
    evaluate,
    is_grothendieck,
    projective_norm,
    total_variation_vs_norm,
)
from gkit.sdp import grothendieck_ratio, represent, round_signs, sdp_value
from gkit.fubini import (
    MultilinearForm,
    MultiTensorElement,
    PartialOperator,
    fubini_evaluate,
    multilinear_norm,
    operator_form_check,
    partial_apply,
    partial_contract,
    permutation_evaluate,
)
from gkit.kernels import (
    Kernel,
    QuadratureGrid,
    compose,
    discretize,
    fubini_kernel_check,
    green_1d,
    hs_norm,
    make_grid,
    operator_norm,
    spectral_check,
)
