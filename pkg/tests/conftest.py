import numpy as np
import pytest


def orthonormal(rng, p, k):
    q, r = np.linalg.qr(rng.standard_normal((p, k)))
    return q * np.sign(np.diag(r))


def constrained_loadings(rng, p, k):
    """p x k matrix with L^T L = p I."""
    return np.sqrt(p) * orthonormal(rng, p, k)


def random_orthogonal(rng, k):
    return orthonormal(rng, k, k)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


_ACCEPTANCE = []


def pytest_runtest_makereport(item, call):
    if call.when == "call" and item.get_closest_marker("acceptance"):
        doc = (item.function.__doc__ or item.name).strip().splitlines()[0]
        if hasattr(item, "callspec"):
            doc += f" ({item.callspec.id})"
        _ACCEPTANCE.append((item, doc, call.excinfo is None))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for item, doc, ok in _ACCEPTANCE:
        detail = "; ".join(f"{k}={v}" for k, v in item.user_properties)
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {doc}" + (f"  [{detail}]" if detail else ""))
