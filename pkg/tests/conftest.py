import numpy as np
import pytest

from cloudpricing import Instance, ResourceModel, UserType, UtilityParams
from cloudpricing.synth import google_cluster_instance


@pytest.fixture
def toy_instance() -> Instance:
    """One half-elastic type, one resource of capacity 4: optimum at price 0.5."""
    return Instance(
        resources=ResourceModel(names=("r",), capacities=(4.0,)),
        user_types=(UserType("a", 1, (1.0,), UtilityParams(alpha=0.5, c=1.0)),),
        discount=1.0,
    )


@pytest.fixture
def reference_instance() -> Instance:
    return google_cluster_instance()


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240817)
