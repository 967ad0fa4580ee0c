"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v``; the verdicts are repeated in
the terminal summary.
"""
import io
import math

import numpy as np

from cochainsum.cli import main
from cochainsum.cochain import GroupCochain, PairCochain, alt, box_sampler, is_normalized, reindex
from cochainsum.mesh import (
    flat_torus_grid,
    icosphere,
    interval_partition,
    orientation_audit,
    unit_square_grid,
)
from cochainsum.moyal import StarParams, gaussian_window, loop_action, star_oracle, star_product
from cochainsum.quadrature import (
    antisym_top_form_cochain,
    builtin_cochains,
    det_cochain,
    heisenberg_cochain,
    one_form_cochain,
    refine_to_limit,
    riemann_sum,
    solid_angle_cochain,
    top_form_cochain,
)
from cochainsum.vanest import jet_residual_slope, ve_common_source, ve_nerve_alternating

SQ = lambda x: x[:, 0] ** 2  # noqa: E731
SIN = lambda x: np.sin(x[:, 0])  # noqa: E731
EXP2 = lambda x: np.exp(x[:, 0] + x[:, 1])  # noqa: E731
POLY = lambda x: 1 + x[:, 0] + x[:, 1] ** 2  # noqa: E731


def uniform(a, b, n):
    return interval_partition(a, b, np.linspace(a, b, n + 1)[1:-1])


def polygon_area(loop):
    # oracle: signed triangle fan from the centroid, (p, q) as (x, y)
    pts = np.asarray(loop, float)[:, ::-1]
    c = pts.mean(axis=0)
    u, v = pts - c, np.roll(pts, -1, axis=0) - c
    return math.fsum((0.5 * (u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0])).tolist())


def random_simple_polygon(rng):
    # star-shaped about the origin, hence simple
    k = int(rng.integers(3, 60))
    ang = np.sort(rng.uniform(0, 2 * np.pi, k))
    rad = rng.uniform(0.3, 3.0, k)
    return np.stack([rad * np.sin(ang), rad * np.cos(ang)], axis=1)


def random_poly_cochain(rng, degree, dim):
    terms = [(rng.normal(), rng.integers(0, 3, size=(degree + 1, dim))) for _ in range(4)]

    def fn(b):
        out = np.zeros(b.shape[0])
        for c, pw in terms:
            out = out + c * np.prod(b ** pw[None], axis=(1, 2))
        return out

    return PairCochain(degree, dim, fn)


def test_01_left_sum_closed_form(criterion):
    n = 10
    s = riemann_sum(one_form_cochain([SQ], "left"), uniform(0, 1, n)).real
    closed = (n - 1) * n * (2 * n - 1) / (6 * n ** 3)
    a = criterion("1a left sum N=10", abs(s - closed) <= 1e-12 and abs(closed - 0.285) <= 1e-12,
                  f"S={s!r} closed form {closed!r}")
    s = riemann_sum(one_form_cochain([SQ], "left"), uniform(0, 1, 1000)).real
    b = criterion("1b left sum N=1000", abs(s - 1 / 3) < 1e-3, f"|S-1/3|={abs(s - 1 / 3):.3e}")
    assert a and b


def test_02_one_dimensional_orders(criterion):
    ok = True
    for rule, lo, hi in (("left", 0.9, 1.1), ("average", 1.9, 2.1)):
        rep = refine_to_limit(one_form_cochain([SIN], rule), interval_partition(0, math.pi), tol=1e-6,
                              max_levels=12, reference=2.0, stop_on_convergence=False)
        order = rep.fitted_order
        ok &= criterion(f"2 {rule} rule order", lo <= order <= hi, f"fitted order {order:.4f}, want [{lo}, {hi}]")
        err = abs(rep.final - 2)
        ok &= criterion(f"2 {rule} rule level 12", err <= 1e-6, f"|S-2|={err:.3e}")
    assert ok


def test_03_zero_van_est_sums_vanish(criterion):
    om = PairCochain(1, 1, lambda b: (b[:, 1, 0] - b[:, 0, 0]) ** 2)
    rep = refine_to_limit(om, interval_partition(0, 1), tol=1e-12, max_levels=12, reference=0.0,
                          stop_on_convergence=False)
    bound = all(abs(r.value) <= 2.0 ** -r.level * (1 + 1e-12) for r in rep.levels)
    a = criterion("3a S_k <= 2^-k", bound, f"max S_k 2^k = {max(abs(r.value) * 2 ** r.level for r in rep.levels):.6f}")
    b = criterion("3b fitted slope", rep.fitted_order >= 0.9, f"slope {rep.fitted_order:.4f}")
    assert a and b


def test_04_det_exact_every_level(criterion):
    worst = 0.0
    for scheme in ("barycentric", "edgewise"):
        rep = refine_to_limit(det_cochain(), unit_square_grid(1), scheme, tol=1e-12, max_levels=4,
                              stop_on_convergence=False)
        worst = max(worst, max(abs(r.value - 1) for r in rep.levels))
    assert criterion("4 det cochain area", worst <= 1e-12, f"max |S-1| = {worst:.3e}")


def test_05_smooth_two_form(criterion):
    ref = (math.e - 1) ** 2
    plain = refine_to_limit(top_form_cochain(EXP2), unit_square_grid(1), tol=1e-3, max_levels=6,
                            reference=ref, stop_on_convergence=False)
    anti = refine_to_limit(antisym_top_form_cochain(EXP2), unit_square_grid(1), tol=1e-3, max_levels=6,
                           reference=ref, stop_on_convergence=False)
    a = criterion("5a converges to (e-1)^2", plain.converged and abs(plain.final - ref) <= 1e-3,
                  f"|S-(e-1)^2|={abs(plain.final - ref):.3e}")
    b = criterion("5b fitted order", plain.fitted_order >= 0.9, f"order {plain.fitted_order:.3f}")
    ep, ea = plain.errors()[-1], anti.errors()[-1]
    c = criterion("5c alt error <= plain error", ea <= ep, f"alt {ea:.3e} vs plain {ep:.3e}")
    assert a and b and c


def test_06_sphere(criterion):
    errs = [abs(riemann_sum(solid_angle_cochain(), icosphere(level)) - 4 * math.pi) for level in range(5)]
    assert criterion("6 icosphere levels 0-4", max(errs) <= 1e-9, f"max |S-4pi| = {max(errs):.3e}")


def test_07_flat_torus(criterion):
    ok, worst = True, 0.0
    for k in range(2, 9):
        T = flat_torus_grid(k)
        audit = orientation_audit(T)
        ok &= audit.passed and not audit.boundary_faces
        worst = max(worst, abs(riemann_sum(top_form_cochain(None, 2), T) - 1))
    assert criterion("7 flat torus area", ok and worst <= 1e-12, f"k=2..8 max |S-1| = {worst:.3e}, audit ok={ok}")


def test_08_van_est_examples(criterion):
    H = heisenberg_cochain("common_source")
    cs = ve_common_source(H, None, (0, 1)).value
    ne = ve_nerve_alternating(reindex(H, "composable"), None, [(1, 0), (0, 1)]).value
    a = criterion("8a Heisenberg", abs(cs - 1) <= 1e-6 and abs(ne - 1) <= 1e-6 and abs(cs - ne) <= 1e-6,
                  f"common source {cs!r}, nerve {ne!r}")
    d = ve_common_source(det_cochain(), [0.3, 0.7], (0, 1)).value
    b = criterion("8b det", abs(d - 1) <= 1e-6, f"VE = {d!r}")
    assert a and b


def test_09_van_est_of_alt(criterion):
    worst, worst_name = 0.0, ""
    for name, om in builtin_cochains().items():
        A = alt(om)
        axes = tuple(range(om.degree))
        for x in box_sampler(0.1, 0.9, 1, om.dim, 25)[:, 0, :]:
            base = None if isinstance(om, GroupCochain) else x
            dev = abs(ve_common_source(om, base, axes).value - ve_common_source(A, base, axes).value)
            if dev > worst:
                worst, worst_name = dev, name
    assert criterion("9 VE(om) = VE(alt om)", worst <= 1e-6, f"max deviation {worst:.3e} ({worst_name})")


def test_10_antisymmetric_is_normalized(criterion):
    rng = np.random.default_rng(2024)
    passed = 0
    for _ in range(50):
        degree, dim = int(rng.integers(1, 4)), int(rng.integers(1, 4))
        passed += is_normalized(alt(random_poly_cochain(rng, degree, dim)), tol=1e-12)
    assert criterion("10 alt images normalized", passed == 50, f"{passed}/50")


def test_11_jet_check(criterion):
    scales = 2.0 ** -np.arange(3, 9)
    frame = [(1.0, 0.2), (-0.3, 1.0)]
    r = jet_residual_slope(antisym_top_form_cochain(POLY), [0.3, 0.4], frame, scales)
    a = criterion("11a alt(f vol) slope", not r.exact and r.slope > 2.5, f"slope {r.slope}")
    r = jet_residual_slope(det_cochain(), [0.3, 0.4], frame, scales)
    b = criterion("11b det exact-to-precision", r.exact, f"exact={r.exact}")
    r = jet_residual_slope(alt(one_form_cochain([SIN], "left")), [0.3], [[1.0]], scales)
    c = criterion("11c 1-D sin slope", r.slope is not None and r.slope > 1.5, f"slope {r.slope}")
    assert a and b and c


def _moments(window):
    q = lambda Q, P: Q * window(Q, P)  # noqa: E731
    p = lambda Q, P: P * window(Q, P)  # noqa: E731
    return q, p


def test_12_moyal(criterion):
    w = gaussian_window(5.0)
    one = star_product(w, w).value
    ok = criterion("12a 1*1", abs(one - 1) <= 1e-3, f"value {one:.6f}")
    for hbar in (0.5, 1.0):
        # window and box shrink with sqrt(hbar) so the default N still resolves the kernel
        s = math.sqrt(hbar)
        params = StarParams(hbar=hbar, L=30.0 * s)
        q, p = _moments(gaussian_window(5.0 * s))
        comm = star_product(q, p, params=params).value - star_product(p, q, params=params).value
        ok &= criterion(f"12b commutator hbar={hbar}", abs(comm - 1j * hbar) <= 1e-3, f"value {comm:.6f}")
    rng = np.random.default_rng(12)
    worst = 0.0
    for _ in range(10):
        f = gaussian_window(rng.uniform(0.7, 1.5), rng.uniform(-0.5, 0.5, 2))
        g = gaussian_window(rng.uniform(0.7, 1.5), rng.uniform(-0.5, 0.5, 2))
        at = tuple(rng.uniform(-0.5, 0.5, 2))
        a, o = star_product(f, g, at).value, star_oracle(f, g, at)
        worst = max(worst, abs(a - o) / abs(o))
    ok &= criterion("12c star vs oracle", worst <= 3e-3, f"max relative deviation {worst:.3e}")
    assert ok


def test_13_shoelace(criterion):
    rng = np.random.default_rng(13)
    worst = 0.0
    for _ in range(100):
        loop = random_simple_polygon(rng)
        area = polygon_area(loop)
        worst = max(worst, abs(loop_action("average", loop) - area))
    a = criterion("13a average rule = area", worst <= 1e-12, f"max error {worst:.3e}")
    loop = random_simple_polygon(np.random.default_rng(7))
    area = polygon_area(loop)
    ks = np.array([1, 2, 4, 8, 16, 32, 64])
    errs = []
    for k in ks:
        t = np.arange(k) / k
        fine = np.concatenate([u + t[:, None] * (v - u) for u, v in zip(loop, np.roll(loop, -1, axis=0))])
        errs.append(abs(loop_action("right", fine) - area))
    slope = -np.polyfit(np.log(ks), np.log(errs), 1)[0]
    b = criterion("13b right rule refinement", slope >= 0.9 and errs[-1] < errs[0], f"slope {slope:.3f}")
    assert a and b


def test_14_threads_reproducible(criterion, tmp_path):
    blobs = []
    for k in (1, 8):
        path = tmp_path / f"threads{k}.csv"
        code = main(["integrate", "--mesh", "square(64)", "--form", "exp(x+y)", "--antisymmetrize", "true",
                     "--max-levels", "2", "--full", "true", "--threads", str(k), "--csv", str(path),
                     "--reference", "(e-1)^2"], out=io.StringIO())
        assert code in (0, 2)
        blobs.append(path.read_bytes())
    assert criterion("14 threads 1 vs 8 CSV", blobs[0] == blobs[1], f"{len(blobs[0])} bytes each")
