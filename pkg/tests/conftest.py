import numpy as np
import pytest

from afcmem.spectral import C0

NU0 = C0 / 605.977e-9


@pytest.fixture
def nu0():
    return NU0


def lorentzian_chi(nu, center, fwhm, peak_imag):
    """Closed-form complex Lorentzian susceptibility with ``Im`` peak ``peak_imag``."""
    hw = fwhm / 2
    return peak_imag * hw / ((center - nu) - 1j * hw)


def chi_scale(length_m, nu0_hz):
    """``chi''`` per unit optical depth in the narrowband model."""
    return C0 / (2 * np.pi * nu0_hz * length_m)


# Acceptance verdicts, echoed again at the end of the pytest run.
ACCEPTANCE: list[str] = []


def report(label: str, ok: bool, detail: str) -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] {label}: {detail}"
    ACCEPTANCE.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
