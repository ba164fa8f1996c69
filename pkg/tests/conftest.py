import numpy as np
import pytest

acceptance_lines = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[acceptance_lines] = []


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(acceptance_lines, [])
    if lines:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)


@pytest.fixture
def criterion(request):
    """Record one PASS/FAIL line for an acceptance criterion and return the verdict."""

    def record(number: int, passed: bool, detail: str) -> bool:
        line = f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
        request.config.stash[acceptance_lines].append(line)
        print(line)
        return passed

    return record


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_symmetric(rng, n):
    A = rng.standard_normal((n, n))
    return (A + A.T) / 2


def random_psd(rng, n):
    A = rng.standard_normal((n, n))
    return A @ A.T + 0.1 * np.eye(n)


def shared_eigenbasis_instance(n=5, seed=0, proportional=False):
    """Two input covariances sharing an eigenbasis ``U`` with a full-rank filter ``H``.

    The eigenvalue vectors are distinct and not proportional unless
    ``proportional`` is set, in which case the second is twice the first.
    Returns ``(H, U, covariances)``.
    """
    from scipy.stats import ortho_group

    rng = np.random.default_rng(seed)
    U = ortho_group.rvs(n, random_state=rng)
    V = ortho_group.rvs(n, random_state=rng)
    H = (V * rng.uniform(0.5, 2.0, n) * rng.choice([-1.0, 1.0], n)) @ V.T
    lam1 = np.sort(rng.uniform(1.0, 5.0, n))
    lam2 = 2.0 * lam1 if proportional else rng.uniform(1.0, 5.0, n)
    covs = [(U * lam1) @ U.T, (U * lam2) @ U.T]
    return (H + H.T) / 2, U, covs
