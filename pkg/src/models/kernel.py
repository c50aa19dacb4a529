from pydantic import BaseModel, ConfigDict, Field

from .enums import KernelFamily


class KernelSpec(BaseModel):
    """Matérn correlation family, smoothness ν and input dimension r."""

    model_config = ConfigDict(frozen=True)

    family: KernelFamily = KernelFamily.ANISOTROPIC_GEOMETRIC
    nu: float = Field(..., gt=0, description="Matérn smoothness ν.")
    dim: int = Field(..., ge=1, description="Input dimension r.")
