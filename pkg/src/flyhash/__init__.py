"""Similarity search with sparse binary codes.

Expansion hashing projects vectors to a high-dimensional space and keeps
only the alpha strongest activations as set bits. The package bundles
the untrained and trained variants of that idea, classic dense-code
baselines, a fixed-popcount Hamming index with optional coarse
quantization and candidate refinement, and a reproducible evaluation
harness.
"""

from .coarse import CoarseQuantizer, coarse_fit, coarse_probe
from .datasets import (
    Dataset,
    Split,
    load_csv,
    load_fvecs,
    load_ivecs,
    load_raw_f32,
    make_split,
    synth_gaussian_mixture,
    write_csv,
    write_fvecs,
    write_ivecs,
    write_raw_f32,
)
from .harness import (
    EvalReport,
    ci_halfwidth,
    prepare_experiment,
    run_single_trial,
    run_trials,
)
from .hashers import (
    BioHasher,
    BOSLHasher,
    FruitFlyHasher,
    ITQHasher,
    KNNHHasher,
    LSHHasher,
    POSHHasher,
    SphericalHasher,
    TrainConfig,
    biohash_objective,
    expected_gram_statistics,
    fruitfly_init,
    gaussian_orthogonal_init,
    gram_statistics,
    itq_rotation,
    knnh_preprocess,
    lsh_init,
    make_hasher,
    posh_objective,
    sample_gram_statistics,
    spherical_objective,
    train_biohash,
    train_bosl,
    train_itq,
    train_posh,
    train_spherical,
)
from .index import (
    DenseHammingIndex,
    SparseHammingIndex,
    build_index,
    knn_query,
    sparse_hamming,
)
from .linalg import (
    PcaTransform,
    SvdResult,
    apply_center,
    fit_center,
    normalize_rows,
    orthogonalize,
    pca_apply,
    pca_fit,
    thin_svd,
)
from .metrics import (
    RelevanceOracle,
    brute_force_neighbors,
    build_label_oracle,
    build_metric_oracle,
    map_at_n,
    precision_at_n,
)
from .model import HashModel, hash_batch, hash_vector, load_model, save_model
from .refine import LinearDecoder, refine, sbiht_decode, train_decoder
from .wta import scale_invariance_check, wta, wta_batch

__version__ = "0.1.0"

__all__ = [
    "BioHasher",
    "BOSLHasher",
    "CoarseQuantizer",
    "Dataset",
    "DenseHammingIndex",
    "EvalReport",
    "FruitFlyHasher",
    "HashModel",
    "ITQHasher",
    "KNNHHasher",
    "LSHHasher",
    "LinearDecoder",
    "POSHHasher",
    "PcaTransform",
    "RelevanceOracle",
    "SparseHammingIndex",
    "SphericalHasher",
    "Split",
    "SvdResult",
    "TrainConfig",
    "apply_center",
    "biohash_objective",
    "brute_force_neighbors",
    "build_index",
    "build_label_oracle",
    "build_metric_oracle",
    "ci_halfwidth",
    "coarse_fit",
    "coarse_probe",
    "expected_gram_statistics",
    "fit_center",
    "fruitfly_init",
    "gaussian_orthogonal_init",
    "gram_statistics",
    "hash_batch",
    "hash_vector",
    "itq_rotation",
    "knn_query",
    "knnh_preprocess",
    "load_csv",
    "load_fvecs",
    "load_ivecs",
    "load_model",
    "load_raw_f32",
    "lsh_init",
    "make_hasher",
    "make_split",
    "map_at_n",
    "normalize_rows",
    "orthogonalize",
    "pca_apply",
    "pca_fit",
    "posh_objective",
    "precision_at_n",
    "prepare_experiment",
    "refine",
    "run_single_trial",
    "run_trials",
    "sample_gram_statistics",
    "save_model",
    "sbiht_decode",
    "scale_invariance_check",
    "sparse_hamming",
    "spherical_objective",
    "synth_gaussian_mixture",
    "thin_svd",
    "train_biohash",
    "train_bosl",
    "train_decoder",
    "train_itq",
    "train_posh",
    "train_spherical",
    "wta",
    "wta_batch",
    "write_csv",
    "write_fvecs",
    "write_ivecs",
    "write_raw_f32",
]
