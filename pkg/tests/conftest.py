import math

import numpy as np
import pytest

from lcklab import kernels
from lcklab.linalg_core import principal_log, spectral_check
from lcklab.potential import PotentialField
from lcklab.shell import ShellSpec

LN2 = math.log(2.0)

RADIAL = np.diag([0.5, 0.5]).astype(complex)
DIAGONAL = np.diag([0.5, 0.25]).astype(complex)
JORDAN = np.array([[0.5, 0.5], [0.0, 0.5]], dtype=complex)
STEEP_JORDAN = np.array([[0.5, 2.0], [0.0, 0.5]], dtype=complex)

BACKEND_NAMES = sorted(kernels.BACKENDS)


def field_for(A, lam, shell=None, backend=None):
    C = spectral_check(A)
    flow = principal_log(C)
    S = shell or ShellSpec.sphere(C.n)
    return PotentialField(C, flow, S, lam, backend=backend)


def annulus_points(A, count, seed, t_range=(-1.0, 1.0)):
    """Sphere directions pushed by exp(tau L); independent of the pipeline sampler."""
    import scipy.linalg as sla
    rng = np.random.default_rng(seed)
    n = A.shape[0]
    L = sla.logm(A)
    out = []
    for _ in range(count):
        z = rng.normal(size=n) + 1j * rng.normal(size=n)
        z /= np.linalg.norm(z)
        out.append(sla.expm(rng.uniform(*t_range) * L) @ z)
    return np.array(out)


@pytest.fixture
def radial():
    return field_for(RADIAL, 2 * LN2)


@pytest.fixture
def diagonal():
    return field_for(DIAGONAL, 1.0)


@pytest.fixture
def jordan():
    return field_for(JORDAN, 2.0)


def radial_config(**overrides):
    d = {"n": 2, "matrix": [[0.5, 0], [0, 0], [0, 0], [0.5, 0]], "shell": {"type": "sphere"},
         "lambda": 2 * LN2, "sampling": {"count": 200, "seed": 7, "t_range": [-1, 1]}}
    d.update(overrides)
    return d
