import math
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from rudvalis.bounds import bound_report, lower_bound_time, reference_constant, theorem_constants
from rudvalis.errors import LemmaInapplicableError, ValidationError
from rudvalis.shuffles import ShuffleSpec

from conftest import make_spec


def test_clamp_when_numerator_nonpositive():
    gamma, r, eps = 0.01, 2.0, 0.25
    edge = math.sqrt(4 * r / (gamma * eps))
    assert lower_bound_time(edge, gamma, r, eps) == 0
    assert lower_bound_time(edge / 3, gamma, r, eps) == 0
    assert lower_bound_time(edge * 3, gamma, r, eps) > 0


def test_exact_cancellation():
    assert lower_bound_time(4.0, 0.5, 1.0, 0.5) == 0


def test_known_value():
    # (ln 1000 + ln(1e-3 * 0.25 / 4) / 2) / -ln(1 - 1e-3) = 2066.549...
    assert lower_bound_time(1000.0, 1e-3, 1.0, 0.25) == 2066


def test_lemma_inapplicable():
    with pytest.raises(LemmaInapplicableError, match="lemma-inapplicable"):
        lower_bound_time(10.0, 0.6, 1.0, 0.25)


@pytest.mark.parametrize(
    "args", [(0.0, 0.1, 1.0, 0.25), (1.0, 0.0, 1.0, 0.25), (1.0, 0.1, 0.0, 0.25), (1.0, 0.1, 1.0, 0.0), (1.0, 0.1, 1.0, 1.0)]
)
def test_invalid_inputs(args):
    with pytest.raises(ValidationError):
        lower_bound_time(*args)


pos = st.floats(1e-3, 1e4)
gam = st.floats(1e-9, 0.5)
eps = st.floats(1e-3, 0.999)


@given(pos, gam, pos, eps, eps)
def test_monotone_in_epsilon(psi, g, r, e1, e2):
    # a looser target 1 - eps holds for longer
    lo, hi = sorted((e1, e2))
    assert lower_bound_time(psi, g, r, lo) <= lower_bound_time(psi, g, r, hi)


@given(pos, gam, pos, pos, eps)
def test_monotone_in_r(psi, g, r1, r2, e):
    lo, hi = sorted((r1, r2))
    assert lower_bound_time(psi, g, lo, e) >= lower_bound_time(psi, g, hi, e)


@given(pos, pos, gam, pos, eps)
def test_monotone_in_psi(p1, p2, g, r, e):
    lo, hi = sorted((p1, p2))
    assert lower_bound_time(lo, g, r, e) <= lower_bound_time(hi, g, r, e)


def test_reference_constants():
    assert reference_constant(ShuffleSpec.rudvalis(9)) == pytest.approx(1 / (8 * math.pi**2))
    assert reference_constant(ShuffleSpec.rudvalis(9, Fraction(1, 3))) == pytest.approx(2 / (8 * math.pi**2))
    assert reference_constant(make_spec("shift-or-swap", 9)) == pytest.approx(1 / (2 * math.pi**2))
    assert reference_constant(make_spec("symmetrized", 9)) == pytest.approx(1 / math.pi**2)


def test_bound_report_fields():
    rep = bound_report(ShuffleSpec.rudvalis(1000), 0.25)
    assert rep.t_lower > 0
    assert rep.theorem_constant == rep.t_lower / (1000**3 * math.log(1000))
    d = rep.to_dict()
    assert d["deviation"] == rep.deviation and d["n"] == 1000


@pytest.mark.parametrize(
    "spec,ns",
    [
        (ShuffleSpec.rudvalis(5), [1000, 3000, 10000]),
        (make_spec("shift-or-swap", 5), [1000, 3000, 10000]),
        (make_spec("symmetrized", 5), [1001, 3001, 10001]),
    ],
)
def test_deviation_decreases_along_grid(spec, ns):
    devs = [r.deviation for r in theorem_constants(spec, 0.25, ns)]
    assert devs[0] > devs[1] > devs[2]


def test_grid_must_increase():
    with pytest.raises(ValidationError):
        theorem_constants(ShuffleSpec.rudvalis(5), 0.25, [100, 50])
