"""Label-consistent transform learning.

Learns an analysis transform ``T`` that sparsifies the data together with
a linear map ``M`` from the sparse codes to one-hot class labels, then
classifies new samples with one thresholded transform product and one
matrix-vector product.
"""

from .classifier import Prediction, encode_test, predict_arrays, predict_batch, predict_class, predict_scores
from .errors import DataError, LctlError, NumericalFailure
from .metrics import (
    ConfusionMatrix,
    average_accuracy,
    confusion_matrix,
    kappa,
    overall_accuracy,
    subspace_counts,
)
from .model import DataMatrix, Hyperparams, LabelMatrix, LctlModel, TransformModel, validate_pair
from .prox import batch_coefficient_update, ista_stacked, soft_threshold, sparse_code_transform
from .trainer import TrainReport, init_transform, train_lctl, train_unsupervised, update_classifier_map
from .transform import (
    cholesky_factor,
    lctl_objective,
    tl_objective,
    transform_closed_form,
    transform_update,
)

__version__ = "0.1.0"
