"""Zero-shot learning with generative latent prototypes.

Fit a linear image-to-semantic map on seen-class data, reconstruct unseen
class prototypes from semantic relationships, sample virtual unseen
instances around them, and classify by nearest semantic class.  A
synthetic benchmark harness reproduces the qualitative behavior at desk
scale.
"""

from .datasets import (
    FeatureMatrix,
    LabelVector,
    SemanticTable,
    ValidationReport,
    ZslSplit,
    aggregate_per_image_semantics,
    validate_split,
)
from .errors import ConvergenceError, NumericalError, SingularMatrixError
from .model import (
    GlapModel,
    Metric,
    PredictionResult,
    Strategy,
    StrategyConfig,
    fit_combined,
    predict,
    train,
)
from .prototypes import (
    ClassMeans,
    ReconstructionWeights,
    VirtualDataset,
    compute_class_means,
    default_sigma2,
    generate_virtual,
    reconstruct_weights,
)
from .solvers import (
    LinearMap,
    Regularizer,
    RegularizerSpec,
    fit_linear_map,
    solve_weights_l1,
    solve_weights_l2,
)
from .synthetic import (
    EvalReport,
    Mixing,
    SweepReport,
    SyntheticConfig,
    evaluate_strategies,
    evaluate_strategies_multi,
    generate_synthetic_split,
    npc_sweep,
    npc_sweep_multi,
)
from .transfer import TransferReport, check_transferability

__version__ = "0.1.0"

__all__ = [
    "FeatureMatrix",
    "LabelVector",
    "SemanticTable",
    "ValidationReport",
    "ZslSplit",
    "aggregate_per_image_semantics",
    "validate_split",
    "ConvergenceError",
    "NumericalError",
    "SingularMatrixError",
    "GlapModel",
    "Metric",
    "PredictionResult",
    "Strategy",
    "StrategyConfig",
    "fit_combined",
    "predict",
    "train",
    "ClassMeans",
    "ReconstructionWeights",
    "VirtualDataset",
    "compute_class_means",
    "default_sigma2",
    "generate_virtual",
    "reconstruct_weights",
    "LinearMap",
    "Regularizer",
    "RegularizerSpec",
    "fit_linear_map",
    "solve_weights_l1",
    "solve_weights_l2",
    "EvalReport",
    "Mixing",
    "SweepReport",
    "SyntheticConfig",
    "evaluate_strategies",
    "evaluate_strategies_multi",
    "generate_synthetic_split",
    "npc_sweep",
    "npc_sweep_multi",
    "TransferReport",
    "check_transferability",
    "__version__",
]
