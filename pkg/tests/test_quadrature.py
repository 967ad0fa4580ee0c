import csv
import io
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cochainsum.cochain import PairCochain, alt, is_antisymmetric, is_normalized, is_sn_antisymmetric
from cochainsum.mesh import (
    Triangulation,
    flat_torus_grid,
    icosphere,
    interval_partition,
    subdivide,
    unit_cube_grid,
    unit_square_grid,
)
from cochainsum.quadrature import (
    CSV_COLUMNS,
    DomainViolation,
    QuadratureError,
    antisym_top_form_cochain,
    det_cochain,
    moyal_cochain,
    one_form_cochain,
    refine_to_limit,
    riemann_sum,
    solid_angle_cochain,
    top_form_cochain,
)
from cochainsum.vanest import ve_common_source

SQ = lambda x: x[:, 0] ** 2  # noqa: E731
SIN = lambda x: np.sin(x[:, 0])  # noqa: E731


def uniform(a, b, n):
    return interval_partition(a, b, np.linspace(a, b, n + 1)[1:-1])


def test_left_sum_matches_formula():
    xs = np.array([0.0, 0.1, 0.35, 0.6, 1.0])
    T = interval_partition(0, 1, xs[1:-1])
    s = riemann_sum(one_form_cochain([SQ], "left"), T)
    assert s.real == pytest.approx(sum(xs[i - 1] ** 2 * (xs[i] - xs[i - 1]) for i in range(1, 5)), abs=1e-15)
    assert s.imag == 0


@pytest.mark.parametrize("n", [1, 2, 10, 37])
def test_left_closed_form(n):
    s = riemann_sum(one_form_cochain([SQ], "left"), uniform(0, 1, n)).real
    assert abs(s - (n - 1) * n * (2 * n - 1) / (6 * n ** 3)) <= 1e-12


def test_right_minus_left_vanishes():
    gaps = []
    for n in (10, 100, 1000):
        T = uniform(0, 1, n)
        gaps.append(abs(riemann_sum(one_form_cochain([SQ], "right"), T) - riemann_sum(one_form_cochain([SQ], "left"), T)))
    assert gaps[0] > gaps[1] > gaps[2] and gaps[2] < 2e-3


def test_average_is_alt_of_left_in_one_dimension():
    left = one_form_cochain([lambda x: np.cos(x[:, 0])], "left")
    avg = one_form_cochain([lambda x: np.cos(x[:, 0])], "average")
    pts = left.sample()
    np.testing.assert_allclose(alt(left).evaluate(pts), avg.evaluate(pts), atol=1e-15)


def test_average_rule_plane():
    # p dq on (q, p) points has coefficients a = (p, 0)
    om = one_form_cochain([lambda x: x[:, 1], lambda x: np.zeros(len(x))], "average")
    pts = om.sample()
    np.testing.assert_allclose(om.evaluate(pts), moyal_cochain().evaluate(pts), atol=1e-15)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(0.01, 0.99), min_size=0, max_size=12, unique=True), st.floats(-3, 3), st.floats(-3, 3))
def test_average_rule_exact_for_affine(points, a, b):
    T = interval_partition(0, 1, sorted(points))
    s = riemann_sum(one_form_cochain([lambda x: a * x[:, 0] + b], "average"), T)
    assert abs(s.real - (a / 2 + b)) <= 1e-12


def test_zero_and_det_examples():
    zero = PairCochain(2, 2, lambda b: np.zeros(b.shape[0]))
    assert riemann_sum(zero, unit_square_grid(3)) == 0
    for T in (unit_square_grid(1), unit_square_grid(4), subdivide(unit_square_grid(2), "edgewise")):
        assert abs(riemann_sum(det_cochain(), T) - 1) <= 1e-12


def test_rejects_bad_input():
    T = unit_square_grid(1)
    with pytest.raises(QuadratureError):
        riemann_sum(one_form_cochain([SQ], "left"), T)
    bad = Triangulation(T.vertices, T.simplices[:, [1, 0, 2]])
    with pytest.raises(QuadratureError, match="orientation audit"):
        riemann_sum(det_cochain(), bad)
    boxed = PairCochain(2, 2, det_cochain().fn, domain=lambda p: np.all(p < 0.9, axis=-1))
    with pytest.raises(DomainViolation):
        riemann_sum(boxed, T)


def test_orientation_reversal_negates():
    for om, T in ((det_cochain(), unit_square_grid(3)),
                  (antisym_top_form_cochain(lambda x: np.exp(x[:, 0] * x[:, 1])), unit_square_grid(3)),
                  (solid_angle_cochain(), icosphere(1))):
        fwd = riemann_sum(om, T)
        rev = riemann_sum(om, T.reorder([1, 0, 2]), check=False)
        assert rev == -fwd


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 4), st.integers(0, 2 ** 31))
def test_additivity_over_partitions(k, seed):
    T = unit_square_grid(k + 1)
    om = top_form_cochain(lambda x: np.cos(3 * x[:, 0]) + x[:, 1])
    rng = np.random.default_rng(seed)
    labels = rng.integers(0, 3, T.n_simplices)
    parts = [riemann_sum(om, T.subset(labels == j), check=False) for j in range(3) if np.any(labels == j)]
    assert abs(sum(parts) - riemann_sum(om, T)) <= 1e-12


def test_threads_bitwise_identical(monkeypatch):
    import cochainsum.quadrature as q

    monkeypatch.setattr(q, "CHUNK", 97)
    T = subdivide(unit_square_grid(6), "barycentric")
    om = antisym_top_form_cochain(lambda x: np.exp(x[:, 0] + x[:, 1]))
    a = riemann_sum(om, T, threads=1)
    b = riemann_sum(om, T, threads=8)
    assert repr(a) == repr(b)


def test_top_form_cochain_properties():
    om = top_form_cochain(None, 2)
    assert om((0, 0), (1, 0), (0, 1)) == 0.5
    f = lambda x: 1 + x[:, 0] + x[:, 1] ** 2  # noqa: E731
    om = top_form_cochain(f, 2)
    assert is_normalized(om) and is_sn_antisymmetric(om)
    assert is_antisymmetric(antisym_top_form_cochain(f, 2))
    for x in ([0.2, 0.3], [0.8, 0.5]):
        assert abs(ve_common_source(om, x, (0, 1)).value - f(np.array([x]))[0]) <= 1e-6


def test_top_form_volume_3d():
    assert abs(riemann_sum(top_form_cochain(None, 3), unit_cube_grid(2)) - 1) <= 1e-12


def test_solid_angle_examples():
    om = solid_angle_cochain()
    e = np.eye(3)
    assert om(e[0], e[1], e[2]) == pytest.approx(math.pi / 2, abs=1e-14)
    assert om(e[0], e[0], e[2]) == 0.0
    assert om(e[0], e[2], e[1]) == pytest.approx(-math.pi / 2, abs=1e-14)
    with pytest.raises(DomainViolation):
        om(e[0], -e[0], e[1])
    assert is_normalized(om) and is_sn_antisymmetric(om) and is_antisymmetric(om)


def test_solid_angle_sum():
    for level in range(4):
        assert abs(riemann_sum(solid_angle_cochain(), icosphere(level)) - 4 * math.pi) <= 1e-9


def test_torus_area():
    for k in (2, 3, 4):
        assert abs(riemann_sum(top_form_cochain(None, 2), flat_torus_grid(k, (2.0, 0.5))) - 1.0) <= 1e-12


def test_refine_sin_average():
    om = one_form_cochain([SIN], "average")
    rep = refine_to_limit(om, interval_partition(0, math.pi), tol=1e-6, max_levels=14)
    assert rep.converged
    assert abs(rep.final - 2) <= 1e-5
    counts = [r.simplices for r in rep.levels]
    diams = rep.diameters()
    assert all(b > a for a, b in zip(counts, counts[1:]))
    assert np.all(np.diff(diams) < 0)
    assert rep.fitted_order is None  # no reference


def test_refine_constant_volume_every_level():
    for n, T in ((2, unit_square_grid(1)), (3, unit_cube_grid(1))):
        rep = refine_to_limit(top_form_cochain(None, n), T, tol=1e-9, max_levels=2, stop_on_convergence=False)
        assert all(abs(r.value - 1) <= 1e-12 for r in rep.levels)


def test_refine_square_gap_to_zero():
    om = PairCochain(1, 1, lambda b: (b[:, 1, 0] - b[:, 0, 0]) ** 2)
    rep = refine_to_limit(om, interval_partition(0, 1), tol=1e-3, max_levels=10, reference=0)
    assert rep.converged
    assert rep.fitted_order >= 0.9


def test_refine_not_converged_is_reported():
    rep = refine_to_limit(top_form_cochain(lambda x: np.exp(x[:, 0] + x[:, 1])), unit_square_grid(1),
                          tol=1e-12, max_levels=2, reference=(math.e - 1) ** 2)
    assert not rep.converged and len(rep.levels) == 3


def test_refine_argument_checks():
    with pytest.raises(QuadratureError):
        refine_to_limit(det_cochain(), unit_square_grid(1), tol=0)
    with pytest.raises(QuadratureError):
        refine_to_limit(det_cochain(), unit_square_grid(1), max_levels=1)


def test_cochain_independence_at_limit():
    tol = 1e-5
    f = lambda x: np.exp(x[:, 0])  # noqa: E731
    om = one_form_cochain([f], "average")
    gap = PairCochain(1, 1, lambda b: (b[:, 1, 0] - b[:, 0, 0]) ** 2)
    om2 = PairCochain(1, 1, lambda b: om.evaluate(b) + gap.evaluate(b))
    assert abs(ve_common_source(gap, [0.3], (0,)).value) <= 1e-12
    a = refine_to_limit(om, interval_partition(0, 1), tol=tol, max_levels=24, reference=math.e - 1)
    b = refine_to_limit(om2, interval_partition(0, 1), tol=tol, max_levels=24, reference=math.e - 1)
    assert a.converged and b.converged
    assert abs(a.final - b.final) <= 2 * tol


def test_cochain_independence_two_dimensions():
    tol = 1e-3
    f = lambda x: 1 + x[:, 0] + x[:, 1] ** 2  # noqa: E731
    om = top_form_cochain(f)

    def extra(b):
        # quadratic in the displacements: zero van Est image
        d1 = b[:, 1] - b[:, 0]
        d2 = b[:, 2] - b[:, 0]
        return (d1[:, 0] * d2[:, 1]) * (d1[:, 0] + d2[:, 1])

    om2 = PairCochain(2, 2, lambda b: om.evaluate(b) + extra(b))
    assert abs(ve_common_source(om2, [0.3, 0.2], (0, 1)).value - f(np.array([[0.3, 0.2]]))[0]) <= 1e-8
    ref = 1 + 0.5 + 1 / 3
    a = refine_to_limit(om, unit_square_grid(1), "edgewise", tol=tol, max_levels=9, reference=ref)
    b = refine_to_limit(om2, unit_square_grid(1), "edgewise", tol=tol, max_levels=9, reference=ref)
    assert a.converged and b.converged
    assert abs(a.final - b.final) <= 2 * tol


def test_affine_antisymmetric_exact_every_level():
    rep = refine_to_limit(det_cochain(), unit_square_grid(1), "edgewise", tol=1e-9, max_levels=4,
                          stop_on_convergence=False)
    assert all(abs(r.value - 1) <= 1e-12 for r in rep.levels)


def test_report_serialization(tmp_path):
    om = one_form_cochain([SIN], "average")
    rep = refine_to_limit(om, interval_partition(0, math.pi), tol=1e-4, max_levels=6, reference=2)
    rows = list(csv.reader(io.StringIO(rep.to_csv())))
    assert tuple(rows[0]) == CSV_COLUMNS
    assert len(rows) == len(rep.levels) + 1
    assert float(rows[-1][3]) == rep.final.real
    doc = json.loads(rep.to_json())
    assert doc["converged"] == rep.converged and len(doc["levels"]) == len(rep.levels)
    rep.write(tmp_path / "r.csv", tmp_path / "r.json")
    assert (tmp_path / "r.csv").read_text() == rep.to_csv()
