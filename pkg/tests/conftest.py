"""Shared fixtures and the acceptance summary printed after the run."""

import mpmath
import numpy as np
import pytest

from burstlab.series import UniformSeries

_ACCEPTANCE = {}


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "acceptance(label): acceptance criterion reported in the summary")


@pytest.fixture
def measured(request):
    """Tests call ``measured("alpha=1.49 +/- 0.03")`` to attach a value to
    their acceptance line."""
    notes = []
    request.node.user_properties.append(("measured", notes))
    return notes.append


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    label = dict(report.user_properties).get("acceptance_label")
    if label is None:
        return
    notes = dict(report.user_properties).get("measured") or []
    _ACCEPTANCE[label] = (report.outcome, "; ".join(notes))


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("acceptance")
        if mark is not None:
            label = mark.args[0]
            if hasattr(item, "callspec"):
                label = f"{label} [{item.callspec.id}]"
            item.user_properties.append(("acceptance_label", label))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for label in sorted(_ACCEPTANCE, key=_label_key):
        outcome, note = _ACCEPTANCE[label]
        status = "PASS" if outcome == "passed" else "FAIL"
        tr.write_line(f"{status}  {label}" + (f"  ({note})" if note else ""))


def _label_key(label):
    head = label.split()[0]
    digits = "".join(c for c in head if c.isdigit())
    return (int(digits) if digits else 99, label)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def mp_first_zero(nu):
    """High-precision oracle: mpmath root of J_nu started from a coarse bracket."""
    mpmath.mp.dps = 30
    xs = np.arange(max(nu, 0.0) + 0.05, nu + 10, 0.05)
    vals = [float(mpmath.besselj(nu, x)) for x in xs]
    i = next(i for i in range(len(xs) - 1) if vals[i] * vals[i + 1] < 0)
    return float(mpmath.findroot(lambda x: mpmath.besselj(nu, x), (xs[i], xs[i + 1]),
                                 solver="anderson"))


def piecewise_series(beta1, beta2, f_break, n, rng):
    """Gaussian series whose spectrum is a continuous broken power law."""
    f = np.fft.rfftfreq(n)
    f[0] = f[1]
    s = np.where(f < f_break, (f / f_break) ** -beta1, (f / f_break) ** -beta2)
    s[0] = 0.0
    coef = np.sqrt(s / 2) * (rng.standard_normal(f.size) + 1j * rng.standard_normal(f.size))
    return UniformSeries(np.fft.irfft(coef, n), 1.0)
