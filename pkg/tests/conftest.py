import numpy as np
import pytest

from camscore.tensor import Tensor
from camscore.weights import SplitMix64, generate_reference


def synth_input(seed: int, shape=(3, 64, 64)) -> Tensor:
    """Deterministic synthetic network input from a SplitMix64 stream."""
    prng = SplitMix64(seed)
    n = int(np.prod(shape))
    vals = np.array([prng.uniform() * 2.0 - 1.0 for _ in range(n)])
    return Tensor(vals.reshape(shape))


@pytest.fixture(scope="session")
def ref42():
    """The seed-42 reference backend shared across tests (immutable)."""
    return generate_reference(42)
