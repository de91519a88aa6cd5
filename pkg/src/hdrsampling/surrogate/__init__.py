"""Surrogate models: sparse PCE, Kriging and PC-Kriging."""
import json
from pathlib import Path

from .basis import MultiIndexSet, full_cardinality, orthonormal_eval, total_degree_indices
from .kriging import KrigingModel, PckModel, kriging_loo, profile_nll, train_kriging, train_pck
from .pce import ExperimentalDesign, PceModel, pce_loo, relative_loo, train_pce

_KINDS = {"pce": PceModel, "kriging": KrigingModel, "pck": PckModel}


def predict(model, x):
    """Mean prediction of any trained surrogate at physical points ``x``."""
    return model.predict(x)


def model_loo(model, ed):
    if isinstance(model, PceModel):
        return pce_loo(model, ed)
    return kriging_loo(model, ed)


def save_model(model, path):
    Path(path).write_text(json.dumps(model.to_dict()))


def load_model(source):
    """Rebuild a model from a dict, a JSON string or a JSON file path."""
    if isinstance(source, dict):
        data = source
    else:
        text = str(source)
        data = json.loads(text if text.lstrip().startswith("{") else Path(text).read_text())
    try:
        cls = _KINDS[data["kind"]]
    except KeyError:
        raise ValueError(f"unknown model kind {data.get('kind')!r}") from None
    return cls.from_dict(data)


__all__ = [
    "ExperimentalDesign", "KrigingModel", "MultiIndexSet", "PceModel", "PckModel",
    "full_cardinality", "kriging_loo", "load_model", "model_loo", "orthonormal_eval",
    "pce_loo", "predict", "profile_nll", "relative_loo", "save_model",
    "total_degree_indices", "train_kriging", "train_pce", "train_pck",
]
