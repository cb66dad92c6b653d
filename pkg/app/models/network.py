"""
Parameter containers for the multi-scale network.

A model is a chain of 2x subnetworks. Each subnetwork holds two head
convolutions, two information distillation blocks and a transposed
convolution projecting the trunk back to one elevation channel.
"""
from dataclasses import dataclass, field
from typing import Iterator, List, Optional, Tuple

from app.core.tensor import Parameter
from app.schemas.training import TrainingSummary


@dataclass(eq=False)
class IdbParams:
    conv1_w: Parameter
    conv1_b: Parameter
    conv2_w: Parameter
    conv2_b: Parameter
    conv3_w: Parameter
    conv3_b: Parameter
    conv4_w: Parameter
    conv4_b: Parameter
    conv5_w: Parameter
    conv5_b: Parameter
    conv6_w: Parameter
    conv6_b: Parameter
    fuse_w: Parameter
    fuse_b: Parameter
    split: int = 4

    def parameters(self) -> List[Parameter]:
        return [
            self.conv1_w, self.conv1_b,
            self.conv2_w, self.conv2_b,
            self.conv3_w, self.conv3_b,
            self.conv4_w, self.conv4_b,
            self.conv5_w, self.conv5_b,
            self.conv6_w, self.conv6_b,
            self.fuse_w, self.fuse_b,
        ]


@dataclass(eq=False)
class SubnetParams:
    head1_w: Parameter
    head1_b: Parameter
    head2_w: Parameter
    head2_b: Parameter
    idb1: IdbParams
    idb2: IdbParams
    up_w: Parameter
    up_b: Parameter

    def parameters(self) -> List[Parameter]:
        return (
            [self.head1_w, self.head1_b, self.head2_w, self.head2_b]
            + self.idb1.parameters()
            + self.idb2.parameters()
            + [self.up_w, self.up_b]
        )


@dataclass(eq=False)
class MsmModel:
    """
    An ordered chain of subnetworks plus the metadata persisted with it.

    ``source_cell_size`` is the input cell size of stage 0; stage e expects
    ``source_cell_size / 2**e``. ``offset`` and ``scale`` normalise the input
    of each stage's convolution path; the residual is scaled back and the
    nearest-neighbour skip path stays in raw elevations.
    """
    subnets: List[SubnetParams]
    split: int = 4
    features: int = 64
    source_cell_size: Optional[float] = None
    offset: float = 0.0
    scale: float = 1.0
    training: TrainingSummary = field(default_factory=TrainingSummary)

    @property
    def n(self) -> int:
        return len(self.subnets)

    def parameters(self) -> List[Parameter]:
        """All parameters in manifest (payload) order."""
        params: List[Parameter] = []
        for subnet in self.subnets:
            params.extend(subnet.parameters())
        return params

    def named_shapes(self) -> Iterator[Tuple[str, Tuple[int, ...]]]:
        for p in self.parameters():
            yield p.name, p.shape

    def zero_grad(self) -> None:
        for p in self.parameters():
            p.zero_grad()

    def __repr__(self) -> str:
        return (
            f"MsmModel(n={self.n}, split={self.split}, features={self.features}, "
            f"source_cell_size={self.source_cell_size})"
        )
