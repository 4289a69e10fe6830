"""Twin-network state for self-supervised pre-training."""

from dataclasses import dataclass, replace

from app.exceptions import ConfigurationError, DimensionMismatchException
from app.models.network import DenseBlock


@dataclass(frozen=True, eq=False)
class ByolState:
    """Online encoder/projector/predictor and their EMA target twins."""

    online_encoder: DenseBlock
    online_projector: DenseBlock
    online_predictor: DenseBlock
    target_encoder: DenseBlock
    target_projector: DenseBlock
    tau: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.tau <= 1.0:
            raise ConfigurationError(f"tau must lie in [0, 1] (got {self.tau})")
        if not self.online_encoder.same_shape(self.target_encoder):
            raise DimensionMismatchException(
                "target encoder shape",
                tuple(self.online_encoder.layer_shapes),
                tuple(self.target_encoder.layer_shapes),
            )
        if not self.online_projector.same_shape(self.target_projector):
            raise DimensionMismatchException(
                "target projector shape",
                tuple(self.online_projector.layer_shapes),
                tuple(self.target_projector.layer_shapes),
            )

    def with_online(
        self, encoder: DenseBlock, projector: DenseBlock, predictor: DenseBlock
    ) -> "ByolState":
        return replace(
            self,
            online_encoder=encoder,
            online_projector=projector,
            online_predictor=predictor,
        )
