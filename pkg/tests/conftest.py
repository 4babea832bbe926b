from __future__ import annotations

import numpy as np
import pytest

from isokernel.kernel import IsolationModel


def manual_model(centers, radii, seed: int = 0) -> IsolationModel:
    """Model with hand-placed spheres; ``centers`` is (t, psi) for 1-d or (t, psi, d)."""
    C = np.asarray(centers, dtype=np.float64)
    if C.ndim == 2:
        C = C[:, :, None]
    r = np.asarray(radii, dtype=np.float64)
    t, psi = r.shape
    return IsolationModel(C, r, np.tile(np.arange(psi), (t, 1)), psi=psi, t=t, seed=seed)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def cube_model():
    """200 uniform points in [0,1]^5 with psi=16, t=50, seed=7."""
    from isokernel.kernel import fit_isolation_model

    D = np.random.default_rng(2024).random((200, 5))
    return D, fit_isolation_model(D, psi=16, t=50, seed=7)


_ACCEPTANCE: list[str] = []


@pytest.fixture
def verdict(request):
    """Record one PASS/FAIL line for an acceptance criterion and print it."""

    def record(number: int, ok: bool, detail: str) -> bool:
        line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
        _ACCEPTANCE.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
