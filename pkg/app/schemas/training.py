from typing import Optional

from pydantic import BaseModel, Field, model_validator

from app.core.config import settings


class AdamConfig(BaseModel):
    """Optimizer hyper-parameters and step counter"""
    lr: float = Field(settings.LEARNING_RATE, gt=0, description="Learning rate")
    beta1: float = Field(settings.ADAM_BETA1, ge=0, lt=1, description="First-moment decay")
    beta2: float = Field(settings.ADAM_BETA2, ge=0, lt=1, description="Second-moment decay")
    epsilon: float = Field(settings.ADAM_EPSILON, gt=0, description="Denominator fuzz term")
    weight_decay: float = Field(settings.WEIGHT_DECAY, ge=0, description="L2 penalty added to the gradient")
    step_count: int = Field(0, ge=0, description="Number of updates applied so far")


class TrainConfig(BaseModel):
    """Training run configuration"""
    n_scales: int = Field(2, ge=1, description="Number of 2x subnetworks")
    batch_size: int = Field(settings.BATCH_SIZE, ge=1, description="Patches per iteration")
    patch_size: int = Field(settings.PATCH_SIZE, ge=1, description="Patch edge at input resolution (cells)")
    lr: float = Field(settings.LEARNING_RATE, gt=0, description="Initial learning rate")
    lr_drop_factor: float = Field(settings.LR_DROP_FACTOR, gt=0, description="Divisor applied at the drop")
    lr_drop_after: int = Field(settings.LR_DROP_AFTER, ge=0, description="Iterations before the learning-rate drop")
    weight_decay: float = Field(settings.WEIGHT_DECAY, ge=0, description="L2 weight decay")
    total_iters: int = Field(settings.TOTAL_ITERS, ge=0, description="Training iterations")
    seed: int = Field(settings.DEFAULT_SEED, description="Seed for initialisation and sampling")
    block: int = Field(settings.TRAIN_BLOCK, ge=1, description="Training block edge (high-resolution cells)")
    block_overlap: int = Field(settings.TRAIN_BLOCK_OVERLAP, ge=0, description="Overlap between training blocks")
    split_divisor: int = Field(settings.SPLIT_DIVISOR, ge=1, description="IDB channel split divisor s")
    features: int = Field(settings.FEATURES, ge=1, description="Trunk width (feature channels)")
    stratified: bool = Field(False, description="Draw the batch evenly from each training area")
    normalise: bool = Field(True, description="Fit elevation offset/scale from the training blocks")
    checkpoint_every: int = Field(0, ge=0, description="Checkpoint interval in iterations (0 disables)")
    log_every: int = Field(100, ge=1, description="Progress log interval in iterations")

    @model_validator(mode="after")
    def check_geometry(self) -> "TrainConfig":
        if self.patch_size * 2 ** self.n_scales > self.block:
            raise ValueError(
                f"patch_size * 2^n_scales = {self.patch_size * 2 ** self.n_scales} exceeds block {self.block}"
            )
        if self.block_overlap >= self.block:
            raise ValueError("block_overlap must be smaller than block")
        if self.features % self.split_divisor:
            raise ValueError("split_divisor must divide features")
        return self

    def lr_at(self, iteration: int) -> float:
        """Learning rate for a 1-based iteration number"""
        if iteration > self.lr_drop_after:
            return self.lr / self.lr_drop_factor
        return self.lr


class TrainingSummary(BaseModel):
    """Training metadata stored in the model manifest"""
    iterations: int = Field(0, description="Iterations completed")
    seed: Optional[int] = Field(None, description="Training seed")
    final_loss: Optional[float] = Field(None, description="Loss at the last iteration")
    batch_size: Optional[int] = Field(None, description="Patches per iteration")
    patch_size: Optional[int] = Field(None, description="Patch edge at input resolution")
    blocks: Optional[int] = Field(None, description="Training blocks available")
