"""Cochains on pair groupoids and on Lie groups viewed as groupoids over a point.

Pair-groupoid n-cochains are functions of ``n + 1`` chart points
``(x_0, ..., x_n)``.  Group n-cochains are functions of ``n`` group elements
and carry the nerve description they are written in:

* ``"common_source"``: ``(g_1, ..., g_n)`` all with the same source,
* ``"composable"``: ``(g_1, ..., g_n)`` with ``t(g_i) = s(g_{i+1})``.

The two are related by ``(g_1, ..., g_n) -> (g_1, g_1 g_2, ..., g_1 ... g_n)``.
Every evaluator is vectorized: it receives a batch array of shape
``(N, n + 1, m)`` (pair) or ``(N, n, d)`` (group) and returns ``N`` values.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import exprlang
from .mesh import minimal_image, permutation_parity

__all__ = [
    "CochainError",
    "Permutation",
    "Group",
    "PairCochain",
    "GroupCochain",
    "act",
    "act_on_nerve",
    "alt",
    "alt_n",
    "is_normalized",
    "is_antisymmetric",
    "is_sn_antisymmetric",
    "coboundary",
    "reindex",
    "box_sampler",
    "pair_cochain_from_expr",
    "point_function_from_expr",
]

N_SAMPLES = 256


class CochainError(ValueError):
    pass


@dataclass(frozen=True)
class Permutation:
    """A permutation of ``{0, ..., n}`` given by its images."""

    images: tuple

    def __post_init__(self):
        imgs = tuple(int(i) for i in self.images)
        if sorted(imgs) != list(range(len(imgs))):
            raise CochainError(f"{self.images} is not a permutation of 0..{len(imgs) - 1}")
        object.__setattr__(self, "images", imgs)

    @classmethod
    def identity(cls, size: int) -> "Permutation":
        return cls(tuple(range(size)))

    @classmethod
    def transposition(cls, size: int, i: int, j: int) -> "Permutation":
        imgs = list(range(size))
        imgs[i], imgs[j] = imgs[j], imgs[i]
        return cls(tuple(imgs))

    @classmethod
    def all(cls, size: int, fixing_zero: bool = False):
        if fixing_zero:
            return [cls((0,) + p) for p in itertools.permutations(range(1, size))]
        return [cls(p) for p in itertools.permutations(range(size))]

    @property
    def size(self) -> int:
        return len(self.images)

    @property
    def sign(self) -> int:
        return permutation_parity(self.images)

    def __call__(self, i: int) -> int:
        return self.images[i]

    def __mul__(self, other: "Permutation") -> "Permutation":
        # (self * other)(i) = self(other(i))
        return Permutation(tuple(self.images[j] for j in other.images))

    def inverse(self) -> "Permutation":
        inv = [0] * self.size
        for i, j in enumerate(self.images):
            inv[j] = i
        return Permutation(tuple(inv))


@dataclass(frozen=True)
class Group:
    """A Lie group in global coordinates, acting on batches of shape ``(..., d)``."""

    dim: int
    mul: Callable
    inv: Callable
    identity: np.ndarray
    abelian_vector: bool = False
    name: str = ""

    @classmethod
    def vector(cls, d: int) -> "Group":
        """The additive group ``(R^d, +)``."""
        return cls(d, np.add, np.negative, np.zeros(d), True, f"(R^{d},+)")

    @classmethod
    def heisenberg3(cls) -> "Group":
        """The (non-abelian) 3-dimensional Heisenberg group."""

        def mul(a, b):
            a, b = np.asarray(a, float), np.asarray(b, float)
            out = a + b
            out[..., 2] += a[..., 0] * b[..., 1]
            return out

        def inv(a):
            a = np.asarray(a, float)
            out = -a
            out[..., 2] += a[..., 0] * a[..., 1]
            return out

        return cls(3, mul, inv, np.zeros(3), False, "H3")


def box_sampler(lo, hi, slots: int, dim: int, count: int = N_SAMPLES, seed: int = 0) -> np.ndarray:
    """Deterministic scrambled-Halton samples of ``slots`` points in a box."""
    from scipy.stats import qmc

    lo = np.broadcast_to(np.asarray(lo, float), (dim,))
    hi = np.broadcast_to(np.asarray(hi, float), (dim,))
    u = qmc.Halton(d=slots * dim, scramble=True, seed=seed).random(count)
    return (lo + u.reshape(count, slots, dim) * (hi - lo))


class _Cochain:
    degree: int

    def evaluate(self, batch) -> np.ndarray:  # pragma: no cover - abstract
        raise NotImplementedError

    def __call__(self, *args):
        val = self.evaluate(np.asarray(args, dtype=float)[None])[0]
        return val.item() if isinstance(val, np.generic) else val


class PairCochain(_Cochain):
    """An n-cochain on ``Pair(U)`` for a chart ``U`` of dimension ``dim``.

    Parameters
    ----------
    degree, dim : int
    fn : callable
        Maps an array of shape ``(N, degree + 1, dim)`` to ``N`` scalars.
    periods : sequence, optional
        Torus periods.  Points are then unwrapped to minimal-image
        representatives relative to slot 0 before ``fn`` sees them.
    box : (lo, hi)
        Chart box used by the default predicate sampler.
    domain : callable, optional
        ``domain(points)`` -> bool array; points failing it are rejected by
        the Riemann sum driver.
    sampler : callable, optional
        ``sampler(count, seed)`` -> ``(count, degree + 1, dim)`` sample tuples.
    """

    def __init__(self, degree: int, dim: int, fn, *, periods=None, box=(-1.0, 1.0),
                 domain=None, sampler=None, name: str = ""):
        if degree < 1 or dim < 1:
            raise CochainError("degree and chart dimension must be >= 1")
        self.degree = int(degree)
        self.dim = int(dim)
        self.fn = fn
        self.periods = None if periods is None else tuple(periods)
        self.box = box
        self.domain = domain
        self._sampler = sampler
        self.name = name

    def __repr__(self):
        return f"PairCochain(degree={self.degree}, dim={self.dim}, name={self.name!r})"

    def derive(self, fn, degree=None, name="") -> "PairCochain":
        """A new cochain on the same chart with a different evaluator."""
        return PairCochain(self.degree if degree is None else degree, self.dim, fn,
                           periods=self.periods, box=self.box, domain=self.domain,
                           sampler=self._sampler if degree in (None, self.degree) else None,
                           name=name)

    def evaluate(self, batch) -> np.ndarray:
        pts = np.asarray(batch, dtype=float)
        if pts.ndim != 3 or pts.shape[1:] != (self.degree + 1, self.dim):
            raise CochainError(
                f"expected tuples of shape ({self.degree + 1}, {self.dim}), got {pts.shape[1:]}")
        if self.periods is not None:
            pts = pts[:, :1, :] + minimal_image(pts - pts[:, :1, :], self.periods)
        return np.asarray(self.fn(pts))

    def sample(self, count: int = N_SAMPLES, seed: int = 0) -> np.ndarray:
        if self._sampler is not None:
            return self._sampler(count, seed)
        lo, hi = self.box
        return box_sampler(lo, hi, self.degree + 1, self.dim, count, seed)


class GroupCochain(_Cochain):
    """An n-cochain on a Lie group, in one of the two nerve descriptions."""

    def __init__(self, degree: int, group: Group, fn, *, description: str = "common_source",
                 radius: float = 1.0, name: str = ""):
        if degree < 1:
            raise CochainError("degree must be >= 1")
        if description not in ("common_source", "composable"):
            raise CochainError(f"unknown nerve description {description!r}")
        self.degree = int(degree)
        self.group = group
        self.fn = fn
        self.description = description
        self.radius = radius
        self.name = name

    def __repr__(self):
        return (f"GroupCochain(degree={self.degree}, group={self.group.name!r}, "
                f"description={self.description!r}, name={self.name!r})")

    @property
    def dim(self) -> int:
        return self.group.dim

    def derive(self, fn, description=None, name="") -> "GroupCochain":
        return GroupCochain(self.degree, self.group, fn,
                            description=description or self.description,
                            radius=self.radius, name=name)

    def evaluate(self, batch) -> np.ndarray:
        g = np.asarray(batch, dtype=float)
        if g.ndim != 3 or g.shape[1:] != (self.degree, self.group.dim):
            raise CochainError(
                f"expected tuples of shape ({self.degree}, {self.group.dim}), got {g.shape[1:]}")
        return np.asarray(self.fn(g))

    def sample(self, count: int = N_SAMPLES, seed: int = 0) -> np.ndarray:
        r = self.radius
        return self.group.identity + box_sampler(-r, r, self.degree, self.group.dim, count, seed)


def act_on_nerve(sigma: Permutation, elems, mul, inv, identity) -> list:
    """Act by ``sigma`` on a common-source nerve element ``(g_1, ..., g_n)``.

    Returns ``(g_{s(0)}^{-1} g_{s(1)}, ..., g_{s(0)}^{-1} g_{s(n)})`` with
    ``g_0`` the identity.  ``elems`` is a sequence of group elements (or of
    batches of them) and ``mul``/``inv`` are the structure maps.
    """
    full = [identity] + list(elems)
    if sigma.size != len(full):
        raise CochainError(f"permutation of size {sigma.size} cannot act on {len(elems)} arrows")
    head = inv(full[sigma(0)])
    return [mul(head, full[sigma(i)]) for i in range(1, sigma.size)]


def _permuted(omega, sigma: Permutation, batch: np.ndarray) -> np.ndarray:
    """The batch that ``(sigma . omega)`` hands to ``omega``."""
    if isinstance(omega, PairCochain):
        return batch[:, list(sigma.images), :]
    grp = omega.group
    ident = np.broadcast_to(grp.identity, batch[:, 0, :].shape)
    elems = act_on_nerve(sigma, [batch[:, j, :] for j in range(omega.degree)], grp.mul, grp.inv, ident)
    return np.stack(elems, axis=1)


def _check_common_source(omega):
    if isinstance(omega, GroupCochain) and omega.description != "common_source":
        raise CochainError("the symmetric-group action is defined on the common-source description; "
                           "use reindex() first")


def act(sigma: Permutation, omega):
    """The cochain ``sigma . omega``.

    Pair case: ``(sigma . omega)(x_0..x_n) = omega(x_{s(0)}, ..., x_{s(n)})``.
    Group case: ``omega(g_{s(0)}^{-1} g_{s(1)}, ..., g_{s(0)}^{-1} g_{s(n)})``.
    """
    _check_common_source(omega)
    if sigma.size != omega.degree + 1:
        raise CochainError(f"degree {omega.degree} cochains need permutations of size {omega.degree + 1}")

    def fn(batch):
        return omega.evaluate(_permuted(omega, sigma, batch))

    return omega.derive(fn, name=f"{sigma.images}.{omega.name}")


def _signed_average(omega, perms, batch):
    # Positive and negative terms are summed separately in sorted order, so
    # exactly cancelling terms (e.g. on degenerate tuples) give exactly zero.
    pos, neg = [], []
    for sigma in perms:
        vals = omega.evaluate(_permuted(omega, sigma, batch))
        (pos if sigma.sign > 0 else neg).append(vals)
    out = 0.0
    for group, sign in ((pos, 1.0), (neg, -1.0)):
        if not group:
            continue
        stack = np.stack(group)
        if np.iscomplexobj(stack):
            part = np.sort(stack.real, axis=0).sum(axis=0) + 1j * np.sort(stack.imag, axis=0).sum(axis=0)
        else:
            part = np.sort(stack, axis=0).sum(axis=0)
        out = out + sign * part
    return out / len(perms)


def alt(omega):
    """Antisymmetrization over the full symmetric group ``S_{n+1}``."""
    _check_common_source(omega)
    perms = Permutation.all(omega.degree + 1)
    return omega.derive(lambda batch: _signed_average(omega, perms, batch), name=f"Alt({omega.name})")


def alt_n(omega):
    """Antisymmetrization over the subgroup ``S_n`` fixing slot 0."""
    _check_common_source(omega)
    perms = Permutation.all(omega.degree + 1, fixing_zero=True)
    return omega.derive(lambda batch: _signed_average(omega, perms, batch), name=f"Alt_n({omega.name})")


def _identity_slot(omega, batch, j):
    out = batch.copy()
    if isinstance(omega, PairCochain):
        out[:, j, :] = out[:, 0, :]
    else:
        out[:, j - 1, :] = omega.group.identity
    return out


def is_normalized(omega, sampler=None, tol: float = 1e-12) -> bool:
    """True iff ``|omega| <= tol`` whenever one argument is an identity arrow.

    Pair case: ``x_i = x_0`` for some ``i >= 1``; group case: ``g_j = e``.
    ``sampler(count, seed)`` defaults to the cochain's own sampler.
    """
    batch = (sampler or omega.sample)(N_SAMPLES, 0)
    for j in range(1, omega.degree + 1):
        vals = omega.evaluate(_identity_slot(omega, np.asarray(batch, float), j))
        if np.any(np.abs(vals) > tol):
            return False
    return True


def _sign_equivariant(omega, perms, sampler, tol):
    batch = np.asarray((sampler or omega.sample)(N_SAMPLES, 0), float)
    base = omega.evaluate(batch)
    scale = np.maximum(1.0, np.abs(base))
    for sigma in perms:
        moved = omega.evaluate(_permuted(omega, sigma, batch))
        if np.any(np.abs(moved - sigma.sign * base) > tol * scale):
            return False
    return True


def is_antisymmetric(omega, sampler=None, tol: float = 1e-12) -> bool:
    """Sign-equivariance under ``S_{n+1}``, tested on adjacent transpositions."""
    _check_common_source(omega)
    size = omega.degree + 1
    gens = [Permutation.transposition(size, i, i + 1) for i in range(size - 1)]
    return _sign_equivariant(omega, gens, sampler, tol)


def is_sn_antisymmetric(omega, sampler=None, tol: float = 1e-12) -> bool:
    """Sign-equivariance under the ``S_n`` fixing slot 0."""
    _check_common_source(omega)
    size = omega.degree + 1
    gens = [Permutation.transposition(size, i, i + 1) for i in range(1, size - 1)]
    return _sign_equivariant(omega, gens, sampler, tol)


def coboundary(omega: PairCochain) -> PairCochain:
    """Simplicial coboundary ``(d omega)(x_0..x_{n+1}) = sum_i (-1)^i omega(x without x_i)``."""
    if not isinstance(omega, PairCochain):
        raise CochainError("coboundary is implemented for pair-groupoid cochains")
    n = omega.degree

    def fn(batch):
        total = 0.0
        for i in range(n + 2):
            keep = [k for k in range(n + 2) if k != i]
            total = total + (-1) ** i * omega.evaluate(batch[:, keep, :])
        return total

    return PairCochain(n + 1, omega.dim, fn, periods=omega.periods, box=omega.box,
                       domain=omega.domain, name=f"d({omega.name})")


def _to_common_source(grp: Group, g: np.ndarray) -> np.ndarray:
    out = np.empty_like(g)
    acc = g[:, 0, :]
    out[:, 0, :] = acc
    for j in range(1, g.shape[1]):
        acc = grp.mul(acc, g[:, j, :])
        out[:, j, :] = acc
    return out


def _to_composable(grp: Group, h: np.ndarray) -> np.ndarray:
    out = np.empty_like(h)
    out[:, 0, :] = h[:, 0, :]
    for j in range(1, h.shape[1]):
        out[:, j, :] = grp.mul(grp.inv(h[:, j - 1, :]), h[:, j, :])
    return out


def reindex(omega, to: str):
    """Rewrite ``omega`` in the other nerve description.

    ``to="composable"`` pulls back along ``f(g_1..g_n) = (g_1, g_1 g_2, ...)``;
    ``to="common_source"`` pulls back along its inverse
    ``(h_1..h_n) -> (h_1, h_1^{-1} h_2, ..., h_{n-1}^{-1} h_n)``.
    For pair groupoids both descriptions are the point tuple ``(x_0..x_n)``,
    so the cochain is returned unchanged.
    """
    if to not in ("common_source", "composable"):
        raise CochainError(f"unknown nerve description {to!r}")
    if isinstance(omega, PairCochain) or omega.description == to:
        return omega
    grp = omega.group
    if to == "composable":
        fn = lambda g: omega.evaluate(_to_common_source(grp, g))  # noqa: E731
    else:
        fn = lambda h: omega.evaluate(_to_composable(grp, h))  # noqa: E731
    return omega.derive(fn, description=to, name=omega.name)


def point_bindings(points: np.ndarray) -> dict:
    """Expression bindings for a batch of points of shape ``(..., m)``.

    Coordinates are available as ``x_0, x_1, ...`` and, for the first three,
    also as ``x``, ``y``, ``z``.
    """
    env = {f"x_{i}": points[..., i] for i in range(points.shape[-1])}
    for alias, i in (("x", 0), ("y", 1), ("z", 2)):
        if i < points.shape[-1]:
            env[alias] = points[..., i]
    return env


def point_function_from_expr(src: str):
    """A vectorized scalar function of points from an expression string."""
    tree = exprlang.parse(src)

    def f(points):
        pts = np.asarray(points, float)
        val = exprlang.evaluate(tree, point_bindings(pts))
        return np.broadcast_to(np.asarray(val, dtype=float), pts.shape[:-1]).copy()

    f.source = src
    return f


def pair_cochain_from_expr(src: str, degree: int | None = None, dim: int | None = None, **kwargs) -> PairCochain:
    """A pair cochain from an expression in ``xK_I`` (coordinate I of slot K, zero based)."""
    import re

    tree = exprlang.parse(src)
    names = exprlang.free_variables(tree)
    slots, coords = [], []
    for name in names:
        m = re.fullmatch(r"x(\d+)_(\d+)", name)
        if m is None:
            raise CochainError(f"cochain expressions may only use variables xK_I, found {name!r}")
        slots.append(int(m.group(1)))
        coords.append(int(m.group(2)))
    degree = max(slots, default=1) if degree is None else int(degree)
    dim = max(coords, default=0) + 1 if dim is None else int(dim)
    if slots and (max(slots) > degree or max(coords) >= dim):
        raise CochainError(f"expression uses variables outside degree {degree}, dimension {dim}")

    def fn(batch):
        env = {f"x{k}_{i}": batch[:, k, i] for k in range(degree + 1) for i in range(dim)}
        val = exprlang.evaluate(tree, env)
        return np.broadcast_to(np.asarray(val), batch.shape[:1]).copy()

    return PairCochain(degree, dim, fn, name=src, **kwargs)


def factorial(n: int) -> int:
    return math.factorial(n)
