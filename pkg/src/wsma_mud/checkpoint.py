"""Versioned model checkpoints (numpy ``.npz`` with a JSON header).

Layout of the archive:

``format_version``  int, currently 1
``meta``            JSON text: architecture, label mode, dimensions, training
                    config, seed, RNG algorithm
``params``          flat float64 trainable parameters
``bn/<name>``       batch-norm running statistics
``sequences``       complex L x K spread matrix used during training
"""

import json
import zipfile
from pathlib import Path

import numpy as np

from . import __version__
from .errors import CheckpointError
from .labels import build_codebook
from .nn.params import NetworkParameters
from .nn.spec import NetworkSpec
from .numerics import RNG_ALGORITHM
from .signatures import SignatureMatrix

FORMAT_VERSION = 1


def save_checkpoint(params, spec, codebook, train_metadata, path, sequences=None, link=None):
    """Write a checkpoint. ``link`` supplies L, Nr and the sequences."""
    meta = {
        "format_version": FORMAT_VERSION,
        "spec": spec.to_dict(),
        "label_mode": codebook.mode,
        "K": codebook.K,
        "M": codebook.M,
        "rng": RNG_ALGORITHM,
        "package_version": __version__,
        "train": dict(train_metadata or {}),
    }
    arrays = {
        "format_version": np.array(FORMAT_VERSION),
        "params": params.flat,
    }
    if link is not None:
        meta["L"], meta["Nr"] = link.L, link.Nr
        sequences = link.sequences
    if sequences is not None:
        arrays["sequences"] = sequences.columns
        meta["L"] = sequences.L
    arrays["meta"] = np.array(json.dumps(meta, sort_keys=True))
    for name, value in params.bn_state.items():
        arrays[f"bn/{name}"] = value
    path = Path(path)
    try:
        with open(path, "wb") as fh:
            np.savez(fh, **arrays)
    except OSError as exc:
        raise CheckpointError(f"cannot write checkpoint {path}: {exc}") from exc


def load_checkpoint(path, expected=None):
    """Read a checkpoint; returns ``(params, spec, codebook, metadata)``.

    ``expected`` maps any of ``K, L, Nr, M, label_mode`` to required values;
    a mismatch raises :class:`CheckpointError`. ``metadata["sequences"]``
    holds the training spread matrix when one was stored.
    """
    path = Path(path)
    try:
        with np.load(path, allow_pickle=False) as data:
            arrays = {k: data[k] for k in data.files}
    except FileNotFoundError:
        raise
    except (OSError, ValueError, EOFError, zipfile.BadZipFile, KeyError) as exc:
        raise CheckpointError(f"corrupt checkpoint {path}: {exc}") from exc
    if "format_version" not in arrays or "meta" not in arrays:
        raise CheckpointError(f"{path}: not a checkpoint (missing version or metadata)")
    version = int(arrays["format_version"])
    if version != FORMAT_VERSION:
        raise CheckpointError(f"{path}: unsupported checkpoint version {version} "
                              f"(this build reads version {FORMAT_VERSION})")
    try:
        meta = json.loads(str(arrays["meta"]))
        spec = NetworkSpec.from_dict(meta["spec"])
        bn = {k[3:]: v for k, v in arrays.items() if k.startswith("bn/")}
        params = NetworkParameters(spec, arrays["params"].astype(float), bn)
        codebook = build_codebook(meta["label_mode"], meta["M"], meta["K"])
    except (KeyError, ValueError, TypeError) as exc:
        raise CheckpointError(f"{path}: inconsistent checkpoint contents: {exc}") from exc
    if "sequences" in arrays:
        meta["sequences"] = SignatureMatrix(arrays["sequences"])
    for key, want in (expected or {}).items():
        have = meta.get(key)
        if key == "label_mode":
            want = build_codebook(want, meta["M"], meta["K"]).mode
        if have != want:
            raise CheckpointError(f"{path}: checkpoint has {key}={have!r}, expected {want!r}")
    return params, spec, codebook, meta
