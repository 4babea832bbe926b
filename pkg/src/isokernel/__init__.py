"""Isolation Kernel, Isolation Distributional Kernel (IDK) and the IDK² group detector.

Typical use::

    from isokernel import fit_isolation_model, idk_point_scores

    model = fit_isolation_model(X, psi=16, t=100, seed=0)
    ranked = idk_point_scores(model, X)   # most anomalous first
"""

from isokernel.baselines import (
    SIGMA_GRID,
    NystromMap,
    gaussian_kernel,
    gdk_exact,
    gdk_nystrom,
    gdk_point_scores,
    gdk_point_similarities,
    kde_density,
    nystrom_embed,
    nystrom_fit,
)
from isokernel.distributional import (
    MeanMap,
    ScoredItem,
    idk,
    idk_point_scores,
    idk_point_similarities,
    mean_map,
    point_map,
)
from isokernel.errors import InputError, IsoKernelError, ParameterError
from isokernel.eval import (
    ExperimentReport,
    LabeledScores,
    auc,
    contamination_report,
    scaleup_bench,
    stability_report,
)
from isokernel.groups import (
    Group,
    Idk2Result,
    gdk2_scores,
    idk2,
    idk2_scores,
    idk_gdk_scores,
    pairwise_gdk_matrix,
)
from isokernel.kernel import (
    NONE,
    PSI_GRID,
    IsolationModel,
    embed_point,
    feature_norm,
    feature_norms,
    fit_isolation_model,
    ik_bruteforce,
    ik_gram,
    ik_similarity,
    load_model,
    save_model,
)

__version__ = "0.1.0"

__all__ = [
    "NONE",
    "PSI_GRID",
    "SIGMA_GRID",
    "ExperimentReport",
    "Group",
    "Idk2Result",
    "InputError",
    "IsoKernelError",
    "IsolationModel",
    "LabeledScores",
    "MeanMap",
    "NystromMap",
    "ParameterError",
    "ScoredItem",
    "auc",
    "contamination_report",
    "embed_point",
    "feature_norm",
    "feature_norms",
    "fit_isolation_model",
    "gaussian_kernel",
    "gdk2_scores",
    "gdk_exact",
    "gdk_nystrom",
    "gdk_point_scores",
    "gdk_point_similarities",
    "idk",
    "idk2",
    "idk2_scores",
    "idk_gdk_scores",
    "idk_point_scores",
    "idk_point_similarities",
    "ik_bruteforce",
    "ik_gram",
    "ik_similarity",
    "kde_density",
    "load_model",
    "mean_map",
    "nystrom_embed",
    "nystrom_fit",
    "pairwise_gdk_matrix",
    "point_map",
    "save_model",
    "scaleup_bench",
    "stability_report",
]
