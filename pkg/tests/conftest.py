"""Shared fixtures: the two synthetic benchmarks and the index corpus."""

from types import SimpleNamespace

import pytest

from vsforecast.dataset import (
    SplitSpec,
    apply_normalizer,
    fit_normalizer,
    make_windows,
    split_chronological,
)
from vsforecast.forecast import CoupledLinearModel
from vsforecast.retrieval import RetrievalCorpus
from vsforecast.synthetic import clustered_factor_series, latent_factor_series


def build_pipeline(series, p=12, q=12, stride=1, ridge_lambda=1e-3):
    spec = SplitSpec(0.7, 0.1, 0.2)
    train, val, test = split_chronological(series, spec, p=p, q=q)
    norm = fit_normalizer(train)
    train_n = apply_normalizer(train, norm)
    train_w = make_windows(train_n, p, q, stride)
    val_w = make_windows(apply_normalizer(val, norm), p, q, stride)
    test_w = make_windows(apply_normalizer(test, norm), p, q, stride)
    model = CoupledLinearModel(ridge_lambda).fit(train_w)
    return SimpleNamespace(
        normalizer=norm, train_series=train_n, train_windows=train_w,
        val_windows=val_w, test_windows=test_w,
        corpus=RetrievalCorpus(train_w), model=model)


@pytest.fixture(scope="session")
def coupled_benchmark():
    """Latent-factor benchmark for the recovery and weighting criteria."""
    series = latent_factor_series(1500, n_vars=40, seed=7)
    return build_pipeline(series)


@pytest.fixture(scope="session")
def chain_benchmark():
    """Directed-chain block benchmark for the correlated-failure trend."""
    series = clustered_factor_series(2600, seed=1)
    return build_pipeline(series, ridge_lambda=100.0)


@pytest.fixture(scope="session")
def index_benchmark():
    """Smooth single-factor corpus for the range-query index criterion."""
    series = latent_factor_series(17200, n_vars=40, n_factors=1,
                                  periods=(487.3,),
                                  noise_range=(0.0002, 0.0008),
                                  garbage_frac=0.0, wave="triangle", seed=5)
    pipe = build_pipeline(series, stride=12)
    pipe.corpus = RetrievalCorpus(pipe.train_windows[:1000])
    return pipe
