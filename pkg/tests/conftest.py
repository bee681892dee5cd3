"""Shared fixtures and the acceptance summary printed at the end of a run."""

from __future__ import annotations

import logging

import numpy as np
import pytest

from oqs.bath import SpectralDensity, discretize

ACCEPTANCE_LINES: dict[int, str] = {}


def record_criterion(number: int, passed: bool, detail: str) -> str:
    line = f"CRITERION {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)
    return line


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])


@pytest.fixture(autouse=True)
def _quiet_dt_warning(caplog):
    caplog.set_level(logging.ERROR, logger="oqs.evolution")


@pytest.fixture(scope="session")
def default_bath():
    return discretize(SpectralDensity(0.005, 0.5, 5.0), 100.0, 300)


@pytest.fixture(scope="session")
def small_bath():
    return discretize(SpectralDensity(0.005, 0.5, 5.0), 10.0, 30)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_density(rng, d: int, rank: int | None = None) -> np.ndarray:
    rank = d if rank is None else rank
    x = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    rho = x @ x.conj().T
    return rho / np.trace(rho)
