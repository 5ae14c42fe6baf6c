import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from structbath import kernel
from structbath.network import build_bath_resolvent

from conftest import networks

BACKENDS = kernel.available_backends()


def exact_rcond(m):
    return 1.0 / (np.linalg.norm(m, 1) * np.linalg.norm(np.linalg.inv(m), 1))


def call(spec, omegas, backend, out=-1):
    return kernel.resolve_grid(*spec.bath_arrays(), out, omegas, backend=backend)


def test_python_backend_always_present():
    assert "python" in BACKENDS
    assert kernel.get_backend() in BACKENDS


def test_set_backend_rejects_unknown():
    with pytest.raises(ValueError):
        kernel.set_backend("fortran")


def test_use_backend_restores():
    before = kernel.get_backend()
    with kernel.use_backend("python"):
        assert kernel.get_backend() == "python"
    assert kernel.get_backend() == before


@pytest.mark.skipif("compiled" not in BACKENDS, reason="compiled kernel not built")
@settings(max_examples=60, deadline=None)
@given(networks(), st.lists(st.floats(5.0, 8.5), min_size=1, max_size=20))
def test_backends_agree(spec, omegas):
    out = len(spec.labels) - 2
    a = call(spec, omegas, "python", out)
    b = call(spec, omegas, "compiled", out)
    for x, y in zip(a[:3], b[:3]):
        np.testing.assert_allclose(x, y, rtol=1e-11, atol=1e-300)
    np.testing.assert_array_equal(a[3], b[3])


@pytest.mark.parametrize("backend", BACKENDS)
@settings(max_examples=40, deadline=None)
@given(spec=networks(min_nodes=3), w=st.floats(5.8, 7.6))
def test_condition_estimate_is_conservative(backend, spec, w):
    m = build_bath_resolvent(spec, w).matrix
    est = call(spec, [w], backend)[4][0]
    exact = exact_rcond(m)
    # the estimator bounds ||M^-1|| from below, so rcond is never underestimated
    assert est >= exact * (1 - 1e-10)
    assert est <= 3 * exact


@pytest.mark.parametrize("backend", BACKENDS)
def test_flags(backend):
    w_s, w_b, g_b = 6.0, np.array([6.5, 7.0]), np.array([0.0, 1e-3])
    j_b = np.zeros((2, 2))
    j_sb = np.array([0.1, 0.0])
    sigma, gss, gtr, status, rcond = kernel.resolve_grid(
        w_s, w_b, g_b, j_b, j_sb, 1, np.array([6.4, 6.5]), backend=backend)
    assert status.tolist() == [kernel.OK, kernel.SINGULAR_BATH]
    assert np.isnan(sigma[1]) and np.isfinite(sigma[0])
    # decoupled system node with a zero coupling vector: exact pole at omega_S
    status = kernel.resolve_grid(w_s, w_b, g_b + 1e-3, j_b, j_sb * 0, 0, np.array([6.0]),
                                 backend=backend)[3]
    assert status.tolist() == [kernel.SYSTEM_POLE]


@pytest.mark.parametrize("backend", BACKENDS)
def test_empty_bath(backend):
    sigma, gss, gtr, status, _ = kernel.resolve_grid(
        6.0, np.zeros(0), np.zeros(0), np.zeros((0, 0)), np.zeros(0), -1,
        np.array([6.5]), backend=backend)
    assert sigma[0] == 0 and gss[0] == 2.0 and np.isnan(gtr[0])
    assert status[0] == kernel.OK


def test_fallback_selected_when_extension_missing():
    code = (
        "import sys\n"
        "class Block:\n"
        "    def find_spec(self, name, path=None, target=None):\n"
        "        if name == 'structbath._kernel':\n"
        "            raise ImportError('blocked')\n"
        "sys.meta_path.insert(0, Block())\n"
        "from structbath import kernel\n"
        "from structbath.selfenergy import sigma_network\n"
        "from structbath.sweep import preset\n"
        "print(kernel.available_backends(), kernel.get_backend(), sigma_network(preset('C3').spec, 6.6))\n"
    )
    out = subprocess.run([sys.executable, "-c", code], capture_output=True, text=True, check=True).stdout
    assert out.startswith("('python',) python (-0.50187389183607")
