import numpy as np

from src.models.errors import ConfigurationError, DimensionError
from src.models.operator import LinearOperator


def dot(a, b) -> float:
    """Inner product of two flat (or flattenable) real sequences."""
    a = np.ravel(np.asarray(a, dtype=np.float64))
    b = np.ravel(np.asarray(b, dtype=np.float64))
    if a.size != b.size:
        raise DimensionError(f"dot of sequences with lengths {a.size} and {b.size}")
    return float(np.dot(a, b))


def adjoint_consistency(op: LinearOperator, trials: int = 20, seed: int = 0) -> float:
    """Worst relative gap |⟨Ax, v⟩ − ⟨x, Aᵀv⟩| / |⟨Ax, v⟩| over seeded random pairs."""
    if trials < 1:
        raise ConfigurationError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    floor = np.finfo(np.float64).tiny
    worst = 0.0
    for _ in range(trials):
        x = rng.random(op.image_shape)
        v = rng.random(op.output_length)
        lhs = dot(op.apply(x), v)
        rhs = dot(x, op.adjoint(v))
        worst = max(worst, abs(lhs - rhs) / (abs(lhs) + floor))
    return worst
