"""Parameter-free hierarchical clustering that picks the number of clusters
by maximizing nearest-neighbor consensus between an embedding and a
label-guided perturbation of it."""

from .consensus import (
    ConsensusRecord,
    confusion,
    external_metrics,
    hungarian_max,
    metric_acc,
    metric_fscore,
    metric_nmi,
    metric_purity,
    nnc_score,
)
from .graph import (
    AdjacencyGraph,
    Partition,
    build_adjacency,
    class_centroids,
    connected_components,
    merge_step,
    nearest_class_neighbors,
    propagate_labels,
)
from .io import DatasetFile, generate_blobs, load_dataset
from .kernel import ConfigurationError, SgdConfig, TrainingDivergedError
from .pipeline import RunConfig, RunResult, hierarchy_trace, run
from .representation import EncoderConfig, PerturbationConfig, perturb, train_autoencoder

__version__ = "0.1.0"
