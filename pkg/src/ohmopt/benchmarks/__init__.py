from .registry import (
    REGISTRY,
    BenchmarkSpec,
    Objective,
    Transform,
    UnknownId,
    UnsupportedDim,
    apply_transform,
    lookup,
    make_benchmark,
    random_rotation,
    registry_dump,
    resolve_dim,
    weierstrass,
)

__all__ = [
    "REGISTRY",
    "BenchmarkSpec",
    "Objective",
    "Transform",
    "UnknownId",
    "UnsupportedDim",
    "apply_transform",
    "lookup",
    "make_benchmark",
    "random_rotation",
    "registry_dump",
    "resolve_dim",
    "weierstrass",
]
