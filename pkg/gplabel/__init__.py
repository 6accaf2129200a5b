"""gplabel: online Gaussian-process label refinement."""

from gplabel.bank import BankMode, BankSnapshot, MemoryBank
from gplabel.exceptions import (
    BankError,
    ConfigError,
    FormatError,
    GPLabelError,
    LinalgError,
    NotPositiveDefinite,
)
from gplabel.gp import (
    GpConfig,
    GpState,
    LinearModel,
    Posterior,
    gp_insert,
    gp_posterior,
    gp_posterior_logits,
    gp_warmup,
    linear_fit,
    linear_logits,
    propagated_labels,
    similarity_logits,
)
from gplabel.kernel import KernelParams, kernel_matrix, rbf
from gplabel.refine import (
    RefinementPolicy,
    RefineVariant,
    SoftLabel,
    confidence,
    refine_label,
    unlabeled_loss,
)

__all__ = [
    # Kernel and bank
    "KernelParams",
    "kernel_matrix",
    "rbf",
    "BankMode",
    "BankSnapshot",
    "MemoryBank",
    # GP and baselines
    "GpConfig",
    "GpState",
    "Posterior",
    "gp_warmup",
    "gp_insert",
    "gp_posterior",
    "gp_posterior_logits",
    "propagated_labels",
    "similarity_logits",
    "LinearModel",
    "linear_fit",
    "linear_logits",
    # Refinement
    "RefinementPolicy",
    "RefineVariant",
    "SoftLabel",
    "confidence",
    "refine_label",
    "unlabeled_loss",
    # Exceptions
    "GPLabelError",
    "LinalgError",
    "NotPositiveDefinite",
    "BankError",
    "ConfigError",
    "FormatError",
]
