"""Hashing schemes: trainable and random, sparse and dense."""

from .base import BaseHasher, TrainConfig
from .bosl import BOSLHasher, solve_y_step, train_bosl
from .itq import ITQHasher, KNNHHasher, itq_rotation, knnh_preprocess, train_itq
from .posh import POSHHasher, posh_objective, train_posh
from .random_proj import (
    FruitFlyHasher,
    LSHHasher,
    expected_gram_statistics,
    fruitfly_init,
    gaussian_orthogonal_init,
    gram_statistics,
    lsh_init,
    sample_gram_statistics,
)
from .spherical import (
    BioHasher,
    SphericalHasher,
    biohash_objective,
    spherical_objective,
    train_biohash,
    train_spherical,
)

_ESTIMATORS = {
    "fruitfly": FruitFlyHasher,
    "posh": POSHHasher,
    "spherical": SphericalHasher,
    "biohash": BioHasher,
    "bosl": BOSLHasher,
    "lsh": LSHHasher,
    "itq": ITQHasher,
    "knnh": KNNHHasher,
}


def make_hasher(scheme, n_bits, alpha=None, random_state=None, **options):
    """Build a hasher estimator by scheme name.

    Sparse schemes require alpha; dense schemes reject it. Extra keyword
    options pass through to the estimator constructor.
    """
    if scheme not in _ESTIMATORS:
        raise ValueError(
            f"unknown scheme {scheme!r}; expected one of {sorted(_ESTIMATORS)}"
        )
    cls = _ESTIMATORS[scheme]
    kwargs = dict(n_bits=n_bits, random_state=random_state, **options)
    if scheme in ("lsh", "itq", "knnh"):
        if alpha is not None:
            raise ValueError(f"scheme {scheme!r} emits dense codes; alpha does not apply")
    else:
        if alpha is None:
            raise ValueError(f"scheme {scheme!r} requires alpha")
        kwargs["alpha"] = alpha
    return cls(**kwargs)


__all__ = [
    "BaseHasher",
    "TrainConfig",
    "FruitFlyHasher",
    "LSHHasher",
    "POSHHasher",
    "SphericalHasher",
    "BioHasher",
    "BOSLHasher",
    "ITQHasher",
    "KNNHHasher",
    "make_hasher",
    "fruitfly_init",
    "gaussian_orthogonal_init",
    "lsh_init",
    "gram_statistics",
    "expected_gram_statistics",
    "sample_gram_statistics",
    "train_posh",
    "posh_objective",
    "train_spherical",
    "spherical_objective",
    "train_biohash",
    "biohash_objective",
    "train_bosl",
    "solve_y_step",
    "train_itq",
    "itq_rotation",
    "knnh_preprocess",
]
