import numpy as np
import pytest

from prigp import Dataset, GpModel, KernelParams, backend, resolve_prior
from prigp.expr import CATALOG


@pytest.fixture(params=backend.available())
def kernel_backend(request):
    """Run a test under every importable kernel backend."""
    with backend.force(request.param):
        yield request.param


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


CATALOG_1D = [name for name, src in CATALOG.items()
              if "y" not in src and "z" not in src]
CATALOG_3D = list(CATALOG)


def random_model(rng, n=None, dim=None, inv_ls_scale=1.0, noise_std=0.1,
                 prior_name=None, fit=True):
    """A fitted model on random data with a catalog prior (fuzzing helper)."""
    dim = int(rng.integers(1, 4)) if dim is None else dim
    n = int(rng.integers(1, 21)) if n is None else n
    names = CATALOG_1D if dim < 3 else CATALOG_3D
    prior_name = prior_name or names[int(rng.integers(len(names)))]
    prior = resolve_prior(prior_name, dim)
    params = KernelParams(signal_std=float(rng.uniform(0.5, 2.0)),
                          inv_lengthscales=rng.uniform(0.3, 2.0, dim) * inv_ls_scale,
                          noise_std=noise_std)
    X = rng.uniform(-2.0, 2.0, (n, dim))
    Y = rng.normal(0.0, 1.0, n)
    model = GpModel(params, prior, Dataset(X, Y))
    return model.fit() if fit else model
