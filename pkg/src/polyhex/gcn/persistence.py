"""
Plain-text model files.

    polyhex-gcn 1
    kind classifier
    seed 0
    pooling mean
    k 0
    type 0
    tensor gconv.0 12 128
    ...
    data
    <one value per line, 17 significant digits, tensors in table order>
"""

from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np

from ..core.errors import ModelError
from ..core.logging import get_logger
from .model import GcnModel, layer_shapes

logger = get_logger(__name__)

MAGIC = "polyhex-gcn"
VERSION = "1"


def save_model(model: GcnModel, path: Union[str, Path]) -> None:
    model.check()
    lines = [
        f"{MAGIC} {VERSION}",
        f"kind {model.kind}",
        f"seed {model.seed}",
        f"pooling {model.pooling}",
        f"k {model.k}",
        f"type {model.type_id}",
    ]
    for name, p in zip(model.parameter_names(), model.parameters()):
        lines.append(f"tensor {name} " + " ".join(str(d) for d in p.shape))
    lines.append("data")
    for p in model.parameters():
        lines.extend(format(float(x), ".17g") for x in p.reshape(-1))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
    logger.info(f"保存模型 {path} ({model.kind}, {sum(p.size for p in model.parameters())} 参数)")


def _corrupt(path: Union[str, Path]) -> ModelError:
    return ModelError.from_key("CORRUPT_MODEL", "errors.model.corrupt", path=str(path))


def load_model(path: Union[str, Path], expected_kind: Optional[str] = None) -> GcnModel:
    """Read a model file; optionally insist on a model kind."""
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except FileNotFoundError:
        raise ModelError.from_key(
            "MISSING_FILE", "errors.pipeline.missing_file", path=str(path)
        ) from None
    except (OSError, UnicodeDecodeError):
        raise _corrupt(path) from None

    if not lines or lines[0].split() != [MAGIC, VERSION]:
        raise _corrupt(path)

    header: Dict[str, str] = {}
    table: List[Tuple[str, Tuple[int, ...]]] = []
    pos = 1
    try:
        while lines[pos] != "data":
            parts = lines[pos].split()
            if parts[0] == "tensor":
                table.append((parts[1], tuple(int(d) for d in parts[2:])))
            else:
                header[parts[0]] = parts[1]
            pos += 1
        kind = header["kind"]
        k, type_id, seed = int(header["k"]), int(header["type"]), int(header["seed"])
        pooling = header["pooling"]
    except (IndexError, KeyError, ValueError):
        raise _corrupt(path) from None

    if expected_kind is not None and kind != expected_kind:
        raise ModelError.from_key(
            "KIND_MISMATCH", "errors.model.kind_mismatch", expected=expected_kind, found=kind
        )
    if kind not in ("classifier", "centroid"):
        raise _corrupt(path)

    expected = GcnModel.initialize(kind, 0, k, type_id)
    want = list(zip(expected.parameter_names(), expected.expected_shapes()))
    if table != want:
        raise ModelError.from_key(
            "SHAPE_MISMATCH", "errors.model.shape_mismatch", detail=f"{path}: {table}"
        )

    values = lines[pos + 1 :]
    total = sum(int(np.prod(shape)) for _, shape in table)
    if len(values) != total:
        raise _corrupt(path)
    try:
        flat = np.array([float(v) for v in values])
    except ValueError:
        raise _corrupt(path) from None

    tensors, offset = [], 0
    for _, shape in table:
        size = int(np.prod(shape))
        tensors.append(flat[offset : offset + size].reshape(shape))
        offset += size

    n_gconv = len(layer_shapes(kind, k)[0])
    model = GcnModel(
        kind=kind,
        gconv_weights=tensors[:n_gconv],
        head_weights=tensors[n_gconv::2],
        head_biases=tensors[n_gconv + 1 :: 2],
        pooling=pooling,
        seed=seed,
        k=k,
        type_id=type_id,
    )
    model.check()
    logger.debug(f"读取模型 {path} ({kind})")
    return model
