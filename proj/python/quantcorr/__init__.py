"""Association between two responses at a given quantile level.

Each response gets a quantile regression; the joint signs of the two
residual vectors are labelled 00/11/01/10 and modelled with a multinomial
logit, from which the phi coefficient is predicted over a covariate grid.
"""

import json
import os

from . import _core
from ._core import (
    ConfigError,
    EmptyCategory,
    InferenceUnreliable,
    IngestError,
    InvalidArgument,
    MultinomialFit,
    NonConvergence,
    QuantcorrError,
    QuantileFit,
    SingularDesign,
    bivariate_normal_cdf,
    classify,
    fit_multinomial,
    fit_quantile_regression,
    load_run_config,
    oracle_phi_gaussian,
    phi,
    phi_bounds,
    pinball_loss,
    predict_cells,
)

__version__ = _core.__version__


def _columns(data):
    return {str(k): [float(v) for v in vals] for k, vals in data.items()}


def generate(scenario):
    """Synthetic dataset for a scenario dict; returns {column: list}."""
    return _core._generate(json.dumps(scenario))


def run_two_step(data, tau, config=None):
    """Both steps at one tau. `data` maps column names to sequences and
    `config` uses the same keys as a run config file (input may be omitted)."""
    return _core._run_two_step(_columns(data), float(tau), json.dumps(config or {}))


def bootstrap(data, tau, config=None):
    """Paired bootstrap around the point estimate; replicates, seed and level
    come from config["bootstrap"]."""
    return _core._bootstrap(_columns(data), float(tau), json.dumps(config or {}))


def analyze(config, out=None):
    """Run a full analysis from a config dict or a config file path and
    write the result tables. Returns the run log."""
    base = ""
    if isinstance(config, (str, os.PathLike)):
        base = os.path.dirname(os.fspath(config))
        config = json.loads(load_run_config(os.fspath(config)))
    config = dict(config)
    if out is not None:
        config["output_dir"] = os.fspath(out)
    return _core._analyze(json.dumps(config), base)


def synth(scenario, out):
    """Write a synthetic fixture CSV and its oracle sidecar; returns the
    sidecar path."""
    return _core._synth(json.dumps(scenario), os.fspath(out))
