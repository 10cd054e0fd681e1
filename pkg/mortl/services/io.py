"""Read and write models, reports and sweep tables."""

import csv
import json
import logging
import os
from typing import Iterable, Optional, TextIO

import numpy as np
import scipy.io
import scipy.sparse
from pydantic import BaseModel, ValidationError

from mortl.core.exceptions import ConfigError, DimensionMismatch, ParseError
from mortl.models.models import (
    BenchmarkRow,
    ModelManifest,
    RunConfig,
    StateSpaceModel,
    as_matrix,
)

logger = logging.getLogger(__name__)

MM_HEADER = "%%MatrixMarket"
SWEEP_COLUMNS = [
    "r",
    "err_init",
    "err_opt",
    "delta_err_pct",
    "iters",
    "seconds",
]


def read_matrix(path: str) -> np.ndarray:
    """Read a dense matrix from a Matrix Market file.

    Coordinate (sparse) and array files are both accepted; sparse
    matrices are densified.

    Parameters
    ----------
    path : str
        The file to read.

    Returns
    -------
    np.ndarray
        The real dense matrix.

    Raises
    ------
    ParseError
        If the file is missing, malformed, complex or not finite.

    """
    if not os.path.exists(path):
        raise ParseError(path, "file not found")
    with open(path, "r") as file:
        first = file.readline()
    if not first.startswith(MM_HEADER):
        raise ParseError(path, f"missing {MM_HEADER} header", line=1)
    try:
        data = scipy.io.mmread(path)
    except (ValueError, IndexError, OSError, TypeError) as exc:
        raise ParseError(path, str(exc))
    if scipy.sparse.issparse(data):
        data = data.toarray()
    data = np.asarray(data)
    if np.iscomplexobj(data):
        raise ParseError(path, "complex matrices are not supported")
    try:
        return as_matrix(data, os.path.basename(path))
    except ValueError as exc:
        raise ParseError(path, str(exc))


def write_matrix(path: str, matrix: np.ndarray) -> None:
    """Write a dense matrix in Matrix Market array format.

    17 significant digits make the round trip exact.
    """
    scipy.io.mmwrite(
        path,
        np.asarray(matrix, dtype=float),
        precision=17,
        symmetry="general",
    )


def load_manifest(path: str) -> ModelManifest:
    """Parse the JSON manifest binding the matrix files of a model.

    Raises
    ------
    ParseError
        If the file is missing or not a valid manifest.

    """
    if not os.path.exists(path):
        raise ParseError(path, "file not found")
    with open(path, "r") as file:
        text = file.read()
    try:
        return ModelManifest.model_validate_json(text)
    except ValidationError as exc:
        raise ParseError(path, f"invalid manifest: {exc}")


def model_from_manifest(
    manifest: ModelManifest, base_dir: str = "."
) -> StateSpaceModel:
    """Load the matrices named by a manifest.

    Relative paths are resolved against ``base_dir``.

    Raises
    ------
    DimensionMismatch
        If A, B and C have inconsistent shapes.

    """

    def resolve(name: str) -> str:
        return name if os.path.isabs(name) else os.path.join(base_dir, name)

    A = read_matrix(resolve(manifest.A))
    B = read_matrix(resolve(manifest.B))
    C = read_matrix(resolve(manifest.C))
    n = A.shape[0]
    if A.shape != (n, n):
        raise DimensionMismatch(f"{manifest.A}: A must be square")
    if B.shape[0] != n:
        raise DimensionMismatch(
            f"{manifest.B}: B has {B.shape[0]} rows but A has order {n}"
        )
    if C.shape[1] != n:
        raise DimensionMismatch(
            f"{manifest.C}: C has {C.shape[1]} columns but A has order {n}"
        )
    logger.info(
        "loaded %s: n=%d, m=%d, p=%d", manifest.name, n, B.shape[1], C.shape[0]
    )
    return StateSpaceModel(A=A, B=B, C=C)


def load_model(path: str) -> StateSpaceModel:
    """Load the model described by a manifest file."""
    manifest = load_manifest(path)
    return model_from_manifest(manifest, os.path.dirname(path) or ".")


def save_model(
    model: StateSpaceModel,
    directory: str,
    name: str,
    tau: Optional[float] = None,
) -> str:
    """Write the matrices of a model and its manifest.

    Parameters
    ----------
    model : StateSpaceModel
        The model to save.
    directory : str
        Output directory, created if needed.
    name : str
        Base name of the files: ``{name}_A.mtx``, ..., ``{name}.json``.
    tau : float, optional
        Default horizon recorded in the manifest.

    Returns
    -------
    str
        The path of the manifest.

    """
    os.makedirs(directory, exist_ok=True)
    files = {}
    for key in ("A", "B", "C"):
        files[key] = f"{name}_{key}.mtx"
        write_matrix(os.path.join(directory, files[key]), getattr(model, key))
    manifest = ModelManifest(name=name, tau=tau, **files)
    manifest_path = os.path.join(directory, f"{name}.json")
    with open(manifest_path, "w") as file:
        file.write(manifest.model_dump_json(indent=2, exclude_none=True))
    return manifest_path


def load_run_config(path: Optional[str]) -> RunConfig:
    """Read a JSON run configuration, the defaults when ``path`` is None.

    Raises
    ------
    ConfigError
        If the file is missing or is not valid JSON.
    pydantic.ValidationError
        If a value is out of range or a key is unknown.

    """
    if path is None:
        return RunConfig()
    if not os.path.exists(path):
        raise ConfigError(f"configuration file not found: {path}")
    with open(path, "r") as file:
        try:
            data = json.load(file)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: {exc}")
    return RunConfig.model_validate(data)


def write_report(report: BaseModel, path: str) -> None:
    """Write a report as indented JSON."""
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w") as file:
        file.write(report.model_dump_json(indent=2))


def _number(value: Optional[float]) -> str:
    return "" if value is None else f"{value:.16g}"


def write_sweep_csv(
    rows: Iterable[BenchmarkRow], stream: TextIO, timing: bool = True
) -> None:
    """Write sweep rows as CSV with LF line endings.

    Rows whose initializer failed carry ``diverged`` in ``err_init``.
    With ``timing`` off the ``seconds`` column is left empty so the
    output only depends on the inputs.
    """
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(SWEEP_COLUMNS)
    for row in rows:
        writer.writerow(
            [
                row.r,
                "diverged" if row.diverged else _number(row.err_init),
                _number(row.err_opt),
                _number(row.delta_err_pct),
                row.iterations,
                f"{row.seconds:.3f}" if timing else "",
            ]
        )
