"""Riemann sums of pair-groupoid cochains over ordered triangulations.

``riemann_sum`` evaluates a degree-n cochain on every ordered n-simplex and
adds the results.  Terms are produced in chunks (optionally on a thread pool)
and combined with :func:`math.fsum`, whose result does not depend on the order
of its inputs, so sums are bitwise identical for any thread count.
"""
from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from enum import Enum

import numpy as np

from .cochain import Group, GroupCochain, PairCochain, alt
from .mesh import SubdivisionScheme, Triangulation, orientation_audit, subdivide

__all__ = [
    "QuadratureError",
    "DomainViolation",
    "OneFormRule",
    "LevelRecord",
    "ConvergenceReport",
    "riemann_sum",
    "refine_to_limit",
    "top_form_cochain",
    "antisym_top_form_cochain",
    "one_form_cochain",
    "solid_angle_cochain",
    "det_cochain",
    "heisenberg_cochain",
    "moyal_cochain",
    "builtin_cochains",
    "CSV_COLUMNS",
]

CHUNK = 65536
CSV_COLUMNS = ("level", "simplices", "max_diameter", "sum_real", "sum_imag", "error", "order_estimate")


class QuadratureError(ValueError):
    pass


class DomainViolation(QuadratureError):
    """A simplex vertex lies outside the cochain's chart domain."""


class OneFormRule(str, Enum):
    LEFT = "left"
    RIGHT = "right"
    AVERAGE = "average"


def _chunk_terms(omega, pts):
    vals = np.asarray(omega.evaluate(pts))
    if vals.shape != (pts.shape[0],):
        raise QuadratureError(f"cochain returned shape {vals.shape} for {pts.shape[0]} simplices")
    return vals


def riemann_sum(omega: PairCochain, T: Triangulation, threads: int = 1, check: bool = True) -> complex:
    """Sum of ``omega`` over the ordered simplices of ``T`` (slot 0 = first vertex)."""
    if not isinstance(omega, PairCochain):
        raise QuadratureError("riemann_sum needs a pair-groupoid cochain")
    if omega.degree != T.dim:
        raise QuadratureError(f"cochain degree {omega.degree} != triangulation dimension {T.dim}")
    if omega.dim != T.ambient_dim:
        raise QuadratureError(f"cochain chart dimension {omega.dim} != mesh ambient dimension {T.ambient_dim}")
    if check:
        report = orientation_audit(T)
        if not report.passed:
            raise QuadratureError("triangulation fails the orientation audit: " + "; ".join(report.messages))
    if omega.domain is not None:
        ok = np.asarray(omega.domain(T.vertices), dtype=bool)
        if not ok.all():
            bad = int(np.flatnonzero(~ok)[0])
            raise DomainViolation(f"vertex {bad} at {T.vertices[bad].tolist()} is outside the cochain domain")

    starts = range(0, T.n_simplices, CHUNK)

    def work(start):
        return _chunk_terms(omega, T.simplex_coords(slice(start, start + CHUNK)))

    if threads > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(work, starts))
    else:
        parts = [work(s) for s in starts]
    terms = np.concatenate(parts)
    if np.iscomplexobj(terms):
        return complex(math.fsum(terms.real.tolist()), math.fsum(terms.imag.tolist()))
    return complex(math.fsum(terms.astype(float).tolist()), 0.0)


@dataclass
class LevelRecord:
    level: int
    simplices: int
    max_diameter: float
    sum_real: float
    sum_imag: float
    error: float | None = None
    order_estimate: float | None = None

    @property
    def value(self) -> complex:
        return complex(self.sum_real, self.sum_imag)


@dataclass
class ConvergenceReport:
    """Per-level Riemann sums together with errors and a fitted order.

    ``error`` is the distance to ``reference`` when one is given and the
    Cauchy difference ``|S_k - S_{k-1}|`` otherwise.
    """

    levels: list = field(default_factory=list)
    reference: complex | None = None
    tol: float = 0.0
    fitted_order: float | None = None
    converged: bool = False
    scheme: str = ""

    @property
    def final(self) -> complex:
        return self.levels[-1].value

    def values(self) -> np.ndarray:
        return np.array([rec.value for rec in self.levels])

    def errors(self) -> np.ndarray:
        return np.array([np.nan if r.error is None else r.error for r in self.levels])

    def diameters(self) -> np.ndarray:
        return np.array([r.max_diameter for r in self.levels])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in self.levels:
            w.writerow([r.level, r.simplices, repr(r.max_diameter), repr(r.sum_real), repr(r.sum_imag),
                        "" if r.error is None else repr(r.error),
                        "" if r.order_estimate is None else repr(r.order_estimate)])
        return buf.getvalue()

    def to_dict(self) -> dict:
        ref = self.reference
        return {
            "scheme": self.scheme,
            "tol": self.tol,
            "reference_real": None if ref is None else ref.real,
            "reference_imag": None if ref is None else ref.imag,
            "fitted_order": self.fitted_order,
            "converged": self.converged,
            "final_real": self.final.real,
            "final_imag": self.final.imag,
            "levels": [asdict(r) for r in self.levels],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def write(self, csv_path=None, report_path=None) -> None:
        if csv_path is not None:
            with open(csv_path, "w", newline="") as fh:
                fh.write(self.to_csv())
        if report_path is not None:
            with open(report_path, "w") as fh:
                fh.write(self.to_json() + "\n")


def _fit_order(diams, errs):
    keep = np.isfinite(errs) & (errs > 1e-14)
    if keep.sum() < 2:
        return None
    return float(np.polyfit(np.log(diams[keep]), np.log(errs[keep]), 1)[0])


def refine_to_limit(omega: PairCochain, T0: Triangulation, scheme=SubdivisionScheme.BARYCENTRIC,
                    tol: float = 1e-6, max_levels: int = 8, reference=None, threads: int = 1,
                    stop_on_convergence: bool = True) -> ConvergenceReport:
    """Riemann sums on ``T0`` and its successive subdivisions.

    Levels ``0 .. max_levels`` are visited (level ``k`` is ``T0`` subdivided
    ``k`` times).  The run is converged once ``|S_k - S_{k-1}| < tol`` or
    ``|S_k - reference| < tol``; with ``stop_on_convergence`` it stops there.
    Non-convergence is reported, not raised.
    """
    if not tol > 0:
        raise QuadratureError("tol must be positive")
    if max_levels < 2:
        raise QuadratureError("max_levels must be at least 2")
    scheme = SubdivisionScheme(scheme)
    ref = None if reference is None else complex(reference)
    report = ConvergenceReport(reference=ref, tol=float(tol), scheme=scheme.value)
    T = T0
    prev = None
    for level in range(max_levels + 1):
        if level > 0:
            T = subdivide(T, scheme, check=False)
        s = riemann_sum(omega, T, threads=threads, check=(level == 0))
        rec = LevelRecord(level, T.n_simplices, T.max_diameter, s.real, s.imag)
        cauchy = None if prev is None else abs(s - prev.value)
        rec.error = abs(s - ref) if ref is not None else cauchy
        if level >= 1 and ref is not None:
            e0, e1 = report.levels[-1].error, rec.error
            if e0 > 0 and e1 > 0:
                rec.order_estimate = math.log(e0 / e1) / math.log(report.levels[-1].max_diameter / rec.max_diameter)
        elif level >= 2 and ref is None:
            e0, e1 = report.levels[-1].error, rec.error
            if e0 > 0 and e1 > 0:
                rec.order_estimate = math.log(e0 / e1) / math.log(report.levels[-1].max_diameter / rec.max_diameter)
        report.levels.append(rec)
        hit = (cauchy is not None and cauchy < tol) or (ref is not None and abs(s - ref) < tol)
        if hit:
            report.converged = True
            if stop_on_convergence:
                break
        prev = rec
    if ref is not None:
        report.fitted_order = _fit_order(report.diameters(), report.errors())
    return report


# ---------------------------------------------------------------- built-ins

def _det_volume(b: np.ndarray) -> np.ndarray:
    """Determinant of the displacements ``x_k - x_0`` for a batch ``(N, n+1, n)``."""
    edges = b[:, 1:, :] - b[:, :1, :]
    n = edges.shape[1]
    if n == 1:
        return edges[:, 0, 0]
    if n == 2:
        return edges[:, 0, 0] * edges[:, 1, 1] - edges[:, 0, 1] * edges[:, 1, 0]
    return np.linalg.det(np.transpose(edges, (0, 2, 1)))


def top_form_cochain(f=None, n: int = 2, **kwargs) -> PairCochain:
    """``Omega(x_0..x_n) = f(x_0) * simplex_volume(x_0; x_1..x_n)`` on an n-chart.

    ``f`` maps points of shape ``(N, n)`` to ``N`` values; ``None`` means 1.
    """
    fact = math.factorial(n)

    def fn(b):
        vol = _det_volume(b) / fact
        return vol if f is None else np.asarray(f(b[:, 0, :])) * vol

    kwargs.setdefault("box", (0.0, 1.0))
    return PairCochain(n, n, fn, name=kwargs.pop("name", "f*vol"), **kwargs)


def antisym_top_form_cochain(f=None, n: int = 2, **kwargs) -> PairCochain:
    return alt(top_form_cochain(f, n, **kwargs))


def one_form_cochain(a, rule=OneFormRule.LEFT, **kwargs) -> PairCochain:
    """``Omega(x, y) = sum_i G_i(x, y) (y^i - x^i)`` for a 1-form ``sum_i a_i dx^i``.

    ``G_i`` is ``a_i(x)`` (left), ``a_i(y)`` (right) or their mean (average).
    Each ``a_i`` maps points of shape ``(N, m)`` to ``N`` values.
    """
    rule = OneFormRule(rule)
    coeffs = list(a)
    m = len(coeffs)

    def fn(b):
        x, y = b[:, 0, :], b[:, 1, :]
        total = 0.0
        for i, ai in enumerate(coeffs):
            if rule is OneFormRule.LEFT:
                g = ai(x)
            elif rule is OneFormRule.RIGHT:
                g = ai(y)
            else:
                g = 0.5 * (np.asarray(ai(x)) + np.asarray(ai(y)))
            total = total + np.asarray(g) * (y[:, i] - x[:, i])
        return np.broadcast_to(total, b.shape[:1]).copy()

    kwargs.setdefault("box", (0.0, 1.0))
    return PairCochain(1, m, fn, name=kwargs.pop("name", f"1-form/{rule.value}"), **kwargs)


def _on_sphere(points, tol: float = 1e-9):
    return np.abs(np.linalg.norm(points, axis=-1) - 1.0) <= tol


def _sphere_sampler(count, seed):
    rng = np.random.default_rng(seed)
    v = rng.normal(size=(count, 3, 3))
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def solid_angle_cochain() -> PairCochain:
    """Signed solid angle of the geodesic triangle ``(a, b, c)`` on the unit sphere.

    ``2 atan2(a . (b x c), 1 + a.b + b.c + c.a)``.  A repeated vertex gives
    0; an antipodal pair has no well-defined geodesic triangle and raises.
    """

    def fn(pts):
        a, b, c = pts[:, 0], pts[:, 1], pts[:, 2]
        ab = np.einsum("ij,ij->i", a, b)
        bc = np.einsum("ij,ij->i", b, c)
        ca = np.einsum("ij,ij->i", c, a)
        if np.any(np.minimum(np.minimum(ab, bc), ca) <= -1.0 + 1e-12):
            raise DomainViolation("antipodal vertices in a spherical triangle")
        triple = np.einsum("ij,ij->i", a, np.cross(b, c))
        return 2.0 * np.arctan2(triple, 1.0 + ab + bc + ca)

    return PairCochain(2, 3, fn, domain=_on_sphere, sampler=_sphere_sampler, name="solid_angle")


def det_cochain() -> PairCochain:
    """``1/2 det(x_1 - x_0, x_2 - x_0)`` on the plane: antiderivative of ``dx ^ dy``."""
    return PairCochain(2, 2, lambda b: 0.5 * _det_volume(b), box=(0.0, 1.0), name="det")


def heisenberg_cochain(description: str = "common_source") -> GroupCochain:
    """``((a, b), (a', b')) -> (a b' - a' b) / 2`` on ``(R^2, +)``; same formula in both descriptions."""

    def fn(g):
        return 0.5 * (g[:, 0, 0] * g[:, 1, 1] - g[:, 1, 0] * g[:, 0, 1])

    return GroupCochain(2, Group.vector(2), fn, description=description, name="heisenberg")


def moyal_cochain() -> PairCochain:
    """``1/2 (p_0 + p_1)(q_1 - q_0)`` on phase-space points ``(q, p)``."""
    return PairCochain(1, 2, lambda b: 0.5 * (b[:, 0, 1] + b[:, 1, 1]) * (b[:, 1, 0] - b[:, 0, 0]),
                       name="moyal")


def builtin_cochains() -> dict:
    """Named built-in cochains used by the CLI and the property suites."""
    return {
        "det": det_cochain(),
        "heisenberg": heisenberg_cochain(),
        "moyal": moyal_cochain(),
        "p1dq": PairCochain(1, 2, lambda b: b[:, 1, 1] * (b[:, 1, 0] - b[:, 0, 0]), name="p1dq"),
        "square_gap": PairCochain(1, 1, lambda b: (b[:, 1, 0] - b[:, 0, 0]) ** 2, box=(0.0, 1.0),
                                  name="square_gap"),
        "volume": top_form_cochain(None, 2, name="volume"),
        "poly_top": top_form_cochain(lambda x: 1 + x[:, 0] + x[:, 1] ** 2, 2, name="poly_top"),
        "exp_top": top_form_cochain(lambda x: np.exp(x[:, 0] + x[:, 1]), 2, name="exp_top"),
        "sin_left": one_form_cochain([lambda x: np.sin(x[:, 0])], OneFormRule.LEFT, name="sin_left"),
        "sin_average": one_form_cochain([lambda x: np.sin(x[:, 0])], OneFormRule.AVERAGE, name="sin_average"),
        "exp_left": one_form_cochain([lambda x: np.exp(x[:, 0])], OneFormRule.LEFT, name="exp_left"),
        "solid_angle": solid_angle_cochain(),
    }
