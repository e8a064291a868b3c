"""Model persistence: one self-describing JSON file per trained model.

Floats are serialized through ``repr`` (Python's shortest round-trip form),
so a loaded model reproduces scores bit-for-bit on the same platform.
"""

from __future__ import annotations

import hashlib
import json

import numpy as np

from ..features import Scaler
from .kernels import KernelSpec
from .ocsvm import OcsvmModel
from .ssvdd import NptEmbedding, SSvddModel
from .svdd import SvddModel
from .whiten import WhitenSpec, WhitenedModel
from .api import AnyModel, model_family

MODEL_FORMAT = "canoc-model"
MODEL_VERSION = 1


def _arr(a: np.ndarray) -> list:
    return np.asarray(a, dtype=float).tolist()


def _kernel_dict(kernel: KernelSpec) -> dict:
    return {"kind": kernel.kind, "sigma": kernel.sigma}


def _kernel_from(d: dict) -> KernelSpec:
    return KernelSpec(d["kind"], d.get("sigma"))


def _scaler_dict(scaler: Scaler | None) -> dict | None:
    if scaler is None:
        return None
    return {"mean": _arr(scaler.mean), "stdev": _arr(scaler.stdev)}


def _scaler_from(d: dict | None) -> Scaler | None:
    if d is None:
        return None
    return Scaler(mean=np.array(d["mean"]), stdev=np.array(d["stdev"]))


def _svdd_dict(m: SvddModel) -> dict:
    return {"type": "svdd", "alphas": _arr(m.alphas),
            "support_samples": _arr(m.support_samples),
            "r_squared": m.r_squared, "c": m.c,
            "center_norm_sq": m.center_norm_sq,
            "kernel": _kernel_dict(m.kernel)}


def _svdd_from(d: dict, scaler: Scaler | None = None) -> SvddModel:
    return SvddModel(alphas=np.array(d["alphas"]),
                     support_samples=np.array(d["support_samples"], ndmin=2),
                     r_squared=d["r_squared"], c=d["c"],
                     kernel=_kernel_from(d["kernel"]),
                     center_norm_sq=d["center_norm_sq"], scaler=scaler)


def _ocsvm_dict(m: OcsvmModel) -> dict:
    return {"type": "ocsvm", "alphas": _arr(m.alphas),
            "support_samples": _arr(m.support_samples),
            "rho": m.rho, "nu": m.nu, "kernel": _kernel_dict(m.kernel)}


def _ocsvm_from(d: dict, scaler: Scaler | None = None) -> OcsvmModel:
    return OcsvmModel(alphas=np.array(d["alphas"]),
                      support_samples=np.array(d["support_samples"], ndmin=2),
                      rho=d["rho"], nu=d["nu"],
                      kernel=_kernel_from(d["kernel"]), scaler=scaler)


def model_to_dict(model: AnyModel) -> dict:
    family = model_family(model)
    doc: dict = {"format": MODEL_FORMAT, "version": MODEL_VERSION,
                 "family": family, "scaler": _scaler_dict(model.scaler)}
    if isinstance(model, SvddModel):
        doc["inner"] = _svdd_dict(model)
        doc["params"] = {"C": model.c, "kernel": _kernel_dict(model.kernel)}
    elif isinstance(model, OcsvmModel):
        doc["inner"] = _ocsvm_dict(model)
        doc["params"] = {"nu": model.nu, "kernel": _kernel_dict(model.kernel)}
    elif isinstance(model, SSvddModel):
        doc["inner"] = _svdd_dict(model.inner)
        doc["projection"] = _arr(model.q)
        doc["params"] = {"d": model.d, "C": model.inner.c, "beta": model.beta,
                         "psi": model.psi, "eta": model.eta,
                         "iterations": model.iterations,
                         "kernel": _kernel_dict(model.kernel)}
        if model.npt is not None:
            doc["npt"] = {"train_samples": _arr(model.npt.train_samples),
                          "kernel": _kernel_dict(model.npt.kernel),
                          "eigvecs": _arr(model.npt.eigvecs),
                          "eigvals": _arr(model.npt.eigvals),
                          "row_means": _arr(model.npt.row_means),
                          "total_mean": model.npt.total_mean}
    elif isinstance(model, WhitenedModel):
        inner = model.inner
        doc["inner"] = _ocsvm_dict(inner) if isinstance(inner, OcsvmModel) else _svdd_dict(inner)
        doc["whiten"] = {"transform": _arr(model.whiten.transform),
                         "kind": model.whiten.kind,
                         "epsilon": model.whiten.epsilon,
                         "k_neighbors": model.whiten.k_neighbors}
        doc["params"] = {"epsilon": model.whiten.epsilon,
                         "k_neighbors": model.whiten.k_neighbors,
                         "kernel": _kernel_dict(inner.kernel)}
        if isinstance(inner, OcsvmModel):
            doc["params"]["nu"] = inner.nu
        else:
            doc["params"]["C"] = inner.c
    return doc


def model_from_dict(doc: dict) -> AnyModel:
    if doc.get("format") != MODEL_FORMAT:
        raise ValueError("not a canoc model file")
    if doc.get("version") != MODEL_VERSION:
        raise ValueError(f"unsupported model file version {doc.get('version')}")
    family = doc["family"]
    scaler = _scaler_from(doc.get("scaler"))
    inner = doc["inner"]
    if family == "svdd":
        return _svdd_from(inner, scaler)
    if family == "ocsvm":
        return _ocsvm_from(inner, scaler)
    if family == "ssvdd":
        params = doc["params"]
        npt = None
        if "npt" in doc:
            nd = doc["npt"]
            npt = NptEmbedding(train_samples=np.array(nd["train_samples"], ndmin=2),
                               kernel=_kernel_from(nd["kernel"]),
                               eigvecs=np.array(nd["eigvecs"], ndmin=2),
                               eigvals=np.array(nd["eigvals"]),
                               row_means=np.array(nd["row_means"]),
                               total_mean=nd["total_mean"])
        return SSvddModel(q=np.array(doc["projection"], ndmin=2),
                          inner=_svdd_from(inner), psi=params["psi"],
                          beta=params["beta"], eta=params["eta"],
                          iterations=params["iterations"], d=params["d"],
                          kernel=_kernel_from(params["kernel"]), npt=npt,
                          scaler=scaler)
    if family in ("esvdd", "gesvdd", "geocsvm"):
        wd = doc["whiten"]
        whiten = WhitenSpec(transform=np.array(wd["transform"], ndmin=2),
                            kind=wd["kind"], epsilon=wd["epsilon"],
                            k_neighbors=wd["k_neighbors"])
        inner_model = _ocsvm_from(inner) if inner["type"] == "ocsvm" else _svdd_from(inner)
        return WhitenedModel(whiten, inner_model, family=family, scaler=scaler)
    raise ValueError(f"unknown model family '{family}'")


def save_model(model: AnyModel, path: str, extraction: dict | None = None) -> None:
    """Write the model (plus optional feature-extraction settings) as JSON."""
    doc = model_to_dict(model)
    if extraction:
        doc["extraction"] = dict(extraction)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(doc, f, sort_keys=True)
        f.write("\n")


def load_model(path: str) -> tuple[AnyModel, dict]:
    """Load a model file; returns (model, extraction settings)."""
    with open(path, "r", encoding="utf-8") as f:
        doc = json.load(f)
    return model_from_dict(doc), dict(doc.get("extraction", {}))


def model_tag(model: AnyModel) -> str:
    """Short human identifier, e.g. ``ssvdd-psi1-linear``."""
    family = model_family(model)
    parts = [family]
    if isinstance(model, SSvddModel):
        parts.append(model.psi)
        parts.append(model.kernel.kind)
    elif isinstance(model, WhitenedModel):
        parts.append(model.inner.kernel.kind)
    else:
        parts.append(model.kernel.kind)
    return "-".join(parts)


def config_digest(model: AnyModel) -> str:
    """Stable hash of the model's hyperparameter block."""
    doc = model_to_dict(model)
    payload = json.dumps({"family": doc["family"], "params": doc.get("params", {})},
                         sort_keys=True)
    return hashlib.sha256(payload.encode()).hexdigest()[:12]
