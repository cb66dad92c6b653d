"""
Forward passes, multi-scale loss and persistence for the multi-scale network.
"""
import io
import logging
import math
from pathlib import Path
from typing import BinaryIO, List, Optional, Sequence, Union

import numpy as np
from pydantic import ValidationError

from app.core.config import settings
from app.core.exceptions import (
    ModelLoadError,
    ModelShapeError,
    ModelTruncatedError,
    ModelVersionError,
    ParameterError,
    ShapeError,
    StageError,
)
from app.core.functional import (
    add,
    concat_channels,
    conv2d,
    l1_loss,
    relu,
    scale_shift,
    split_channels,
    transposed_conv2d,
    upsample_nn,
)
from app.core.optim import he_init
from app.core.settings import AppConstants
from app.core.tensor import Parameter, Tensor, as_tensor
from app.models.network import IdbParams, MsmModel, SubnetParams
from app.schemas.manifest import ModelManifest, ParamSpec

logger = logging.getLogger(__name__)

# 3x3 convolutions per subnetwork: two head layers and six per IDB
CONV3_PER_SUBNET = 2 + 2 * 6


def _conv(name: str, cout: int, cin: int, k: int, rng: Optional[np.random.Generator]) -> List[Parameter]:
    shape = (cout, cin, k, k)
    data = np.zeros(shape) if rng is None else he_init(shape, cin * k * k, rng)
    return [Parameter(f"{name}.weight", data), Parameter(f"{name}.bias", np.zeros(cout))]


def _init_idb(prefix: str, features: int, split: int, rng: Optional[np.random.Generator]) -> IdbParams:
    keep = features // split
    passed = features - keep
    c1 = _conv(f"{prefix}.conv1", features, features, 3, rng)
    c2 = _conv(f"{prefix}.conv2", features, features, 3, rng)
    c3 = _conv(f"{prefix}.conv3", features, features, 3, rng)
    c4 = _conv(f"{prefix}.conv4", features, passed, 3, rng)
    c5 = _conv(f"{prefix}.conv5", features, features, 3, rng)
    c6 = _conv(f"{prefix}.conv6", features, features, 3, rng)
    fuse = _conv(f"{prefix}.fuse", features, keep + features, 1, rng)
    return IdbParams(*c1, *c2, *c3, *c4, *c5, *c6, *fuse, split=split)


def _init_subnet(index: int, features: int, split: int, rng: Optional[np.random.Generator]) -> SubnetParams:
    prefix = f"subnets.{index}"
    head1 = _conv(f"{prefix}.head1", features, 1, 3, rng)
    head2 = _conv(f"{prefix}.head2", features, features, 3, rng)
    idb1 = _init_idb(f"{prefix}.idb1", features, split, rng)
    idb2 = _init_idb(f"{prefix}.idb2", features, split, rng)
    # Transposed-conv weights are Cin x Cout x k x k
    up_shape = (features, 1, 4, 4)
    up_w = np.zeros(up_shape) if rng is None else he_init(up_shape, features * 16, rng)
    return SubnetParams(
        *head1,
        *head2,
        idb1,
        idb2,
        Parameter(f"{prefix}.up.weight", up_w),
        Parameter(f"{prefix}.up.bias", np.zeros(1)),
    )


def init_model(
    n: int,
    split: Optional[int] = None,
    features: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
    source_cell_size: Optional[float] = None,
) -> MsmModel:
    """
    Build an n-stage model. Weights are He-initialised from ``rng``; with
    ``rng=None`` every parameter is zero, which makes each stage an exact
    nearest-neighbour upsampler.
    """
    split = settings.SPLIT_DIVISOR if split is None else split
    features = settings.FEATURES if features is None else features
    if n < 1:
        raise ParameterError(f"A model needs at least one stage, got n={n}")
    if split < 1 or features % split or features // split == features:
        raise ParameterError(f"Split divisor {split} must divide {features} features into two parts")
    subnets = [_init_subnet(i, features, split, rng) for i in range(n)]
    return MsmModel(subnets, split=split, features=features, source_cell_size=source_cell_size)


def idb_forward(x: Tensor, p: IdbParams) -> Tensor:
    h = relu(conv2d(x, p.conv1_w, p.conv1_b))
    h = relu(conv2d(h, p.conv2_w, p.conv2_b))
    h = relu(conv2d(h, p.conv3_w, p.conv3_b))
    keep, passed = split_channels(h, p.split)
    r = relu(conv2d(passed, p.conv4_w, p.conv4_b))
    r = relu(conv2d(r, p.conv5_w, p.conv5_b))
    r = relu(conv2d(r, p.conv6_w, p.conv6_b))
    return conv2d(concat_channels(keep, r), p.fuse_w, p.fuse_b)


def subnet_forward(x: Tensor, p: SubnetParams, offset: float = 0.0, scale: float = 1.0) -> Tensor:
    """
    One 2x stage: nearest-neighbour upsampled input plus a learned residual.

    Only the convolution path sees normalised values, ``(x - offset) / scale``;
    its residual is scaled back before it meets the raw skip path, so a zero
    residual reproduces nearest-neighbour upsampling bit for bit.
    """
    if x.data.ndim != 4 or x.shape[1] != 1:
        raise ShapeError(f"subnet_forward expects N x 1 x H x W input, got {x.shape}")
    f = scale_shift(x, 1.0 / scale, -offset / scale)
    f = relu(conv2d(f, p.head1_w, p.head1_b))
    f = relu(conv2d(f, p.head2_w, p.head2_b))
    f = idb_forward(f, p.idb1)
    f = idb_forward(f, p.idb2)
    residual = scale_shift(transposed_conv2d(f, p.up_w, p.up_b), scale, 0.0)
    return add(upsample_nn(x, 2), residual)


def msm_forward(
    x: Union[Tensor, np.ndarray],
    m: MsmModel,
    start: int = 0,
    steps: Optional[int] = None,
) -> List[Tensor]:
    """
    Run stages ``start .. start + steps - 1`` and return every intermediate
    reconstruction (2x, 4x, ...), in elevation units.
    """
    if m.n < 1:
        raise ParameterError("Model has no stages")
    steps = m.n - start if steps is None else steps
    if start < 0 or steps < 1 or start + steps > m.n:
        raise ParameterError(f"Stages {start}..{start + steps - 1} are outside a {m.n}-stage model")
    x = as_tensor(x)
    if x.data.ndim != 4 or x.shape[1] != 1:
        raise ShapeError(f"msm_forward expects N x 1 x H x W input, got {x.shape}")
    if x.shape[2] < 4 or x.shape[3] < 4:
        raise ShapeError(f"msm_forward needs at least 4x4 input, got {x.shape[2]}x{x.shape[3]}")

    h = x
    outputs = []
    for subnet in m.subnets[start:start + steps]:
        h = subnet_forward(h, subnet, m.offset, m.scale)
        outputs.append(h)
    return outputs


def multiscale_loss(recons: Sequence[Tensor], truths: Sequence[Union[Tensor, np.ndarray]]) -> Tensor:
    """Equal-weight sum of per-scale mean absolute errors."""
    if len(recons) != len(truths):
        raise ShapeError(f"{len(recons)} reconstructions but {len(truths)} targets")
    if not recons:
        raise ShapeError("multiscale_loss needs at least one scale")
    loss = l1_loss(recons[0], truths[0])
    for recon, truth in zip(recons[1:], truths[1:]):
        loss = add(loss, l1_loss(recon, truth))
    return loss


def entry_stage(m: MsmModel, cell_size: float, steps: int = 1) -> int:
    """
    Index of the stage whose expected input resolution matches ``cell_size``
    and which leaves ``steps`` stages to run.
    """
    if steps < 1:
        raise ParameterError(f"Need at least one reconstruction step, got {steps}")
    message = AppConstants.ERROR_MESSAGES["stage_mismatch"].format(cell_size=cell_size, steps=steps)
    if m.source_cell_size is None:
        if steps > m.n:
            raise StageError(message)
        return 0
    for stage in range(m.n - steps + 1):
        if math.isclose(m.source_cell_size / 2 ** stage, cell_size, rel_tol=1e-9):
            return stage
    raise StageError(message)


def receptive_field_radius(stages: int = 1) -> int:
    """
    Conservative reach, in output cells, of an input perturbation after
    ``stages`` subnetworks: every 3x3 convolution adds one cell, the
    transposed convolution one more, and each stage doubles the distance.
    """
    radius = 0
    for _ in range(stages):
        radius = 2 * (radius + CONV3_PER_SUBNET + 1)
    return radius + 1


def build_manifest(m: MsmModel) -> ModelManifest:
    return ModelManifest(
        n=m.n,
        s=m.split,
        features=m.features,
        source_cell_size=m.source_cell_size,
        offset=m.offset,
        scale=m.scale,
        training=m.training,
        parameters=[ParamSpec(name=name, shape=list(shape)) for name, shape in m.named_shapes()],
    )


def serialize_model(m: MsmModel) -> bytes:
    header = build_manifest(m).model_dump_json() + "\n"
    payload = np.concatenate([p.data.ravel() for p in m.parameters()]).astype("<f8")
    return header.encode("utf-8") + payload.tobytes()


def save_model(m: MsmModel, sink: Union[str, Path, BinaryIO]) -> None:
    """
    Write a model file: one JSON manifest line followed by the parameters
    as little-endian float64 in manifest order.
    """
    data = serialize_model(m)
    if isinstance(sink, (str, Path)):
        with open(sink, "wb") as fh:
            fh.write(data)
    else:
        sink.write(data)
    logger.debug("Saved %d-stage model (%d bytes)", m.n, len(data))


def deserialize_model(data: bytes) -> MsmModel:
    newline = data.find(b"\n")
    if newline < 0:
        raise ModelTruncatedError("Model file ends before the manifest line is complete")
    try:
        manifest = ModelManifest.model_validate_json(data[:newline])
    except ValidationError as e:
        raise ModelLoadError(f"Unreadable model manifest: {e.errors()[0]['msg']}") from e
    if manifest.magic != AppConstants.MODEL_MAGIC:
        raise ModelLoadError(f"Not a model file (magic {manifest.magic!r})")
    if manifest.version != AppConstants.MODEL_FORMAT_VERSION:
        raise ModelVersionError(
            f"Model format version {manifest.version} is not supported "
            f"(expected {AppConstants.MODEL_FORMAT_VERSION})"
        )

    try:
        m = init_model(manifest.n, manifest.s, manifest.features)
    except ParameterError as e:
        raise ModelShapeError(str(e)) from e
    expected = [(name, list(shape)) for name, shape in m.named_shapes()]
    declared = [(spec.name, spec.shape) for spec in manifest.parameters]
    if expected != declared:
        raise ModelShapeError(
            f"Manifest declares {len(declared)} parameters that do not match a "
            f"{manifest.n}-stage model with {len(expected)} parameters"
        )

    payload = data[newline + 1:]
    total = sum(p.size for p in m.parameters())
    if len(payload) < total * 8:
        raise ModelTruncatedError(f"Payload holds {len(payload)} bytes, expected {total * 8}")
    if len(payload) > total * 8:
        raise ModelShapeError(f"Payload has {len(payload) - total * 8} trailing bytes")

    values = np.frombuffer(payload, dtype="<f8").astype(np.float64)
    pos = 0
    for p in m.parameters():
        p.data[...] = values[pos:pos + p.size].reshape(p.shape)
        pos += p.size

    m.source_cell_size = manifest.source_cell_size
    m.offset = manifest.offset
    m.scale = manifest.scale
    m.training = manifest.training
    return m


def load_model(source: Union[str, Path, BinaryIO, bytes]) -> MsmModel:
    if isinstance(source, bytes):
        return deserialize_model(source)
    if isinstance(source, (str, Path)):
        with open(source, "rb") as fh:
            return deserialize_model(fh.read())
    if isinstance(source, io.IOBase) or hasattr(source, "read"):
        return deserialize_model(source.read())
    raise ModelLoadError(f"Cannot read a model from {type(source).__name__}")
