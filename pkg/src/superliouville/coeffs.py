"""Whitelisted analytic coefficient expressions for the curvature data.

The prescribed interior coefficient h and boundary coefficient lambda
must be nonpositive; rather than admitting arbitrary expressions, a
small fixed grammar keeps that hypothesis checkable by sampling:

    term    := "const" C
             | "poly"  C I J [C I J ...]      (sum of C * x^I * y^J)
             | "bump"  A CX CY SIGMA          (A * exp(-|x-c|^2 / (2 sigma^2)))
    expr    := term [" + " term ...]

Example: ``const -1 + bump -0.5 0.2 0.1 0.25``.

Nonpositivity is enforced by evaluating on the mesh vertices plus a
dense cloud of interior sample points (barycentric draws, so every
sample lies inside the meshed domain) and, for boundary coefficients,
points along the boundary edges.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .mesh import TriMesh

_KINDS = ("const", "poly", "bump")


@dataclass(frozen=True)
class _Term:
    kind: str
    params: tuple

    def __call__(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if self.kind == "const":
            return np.full_like(x, self.params[0])
        if self.kind == "poly":
            out = np.zeros_like(x)
            for c, i, j in zip(*[iter(self.params)] * 3):
                out += c * x ** int(i) * y ** int(j)
            return out
        amp, cx, cy, sigma = self.params
        r_sq = (x - cx) ** 2 + (y - cy) ** 2
        return amp * np.exp(-r_sq / (2 * sigma ** 2))


@dataclass(frozen=True)
class Coefficient:
    """A sum of whitelisted terms; callable on coordinate arrays."""

    text: str
    terms: tuple

    def __call__(self, x, y):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for term in self.terms:
            out = out + term(x, np.asarray(y, dtype=float))
        return out


def _parse_term(tokens) -> _Term:
    kind = tokens[0]
    if kind not in _KINDS:
        raise InputError(
            f"unknown coefficient term {kind!r}; allowed kinds: {', '.join(_KINDS)}"
        )
    try:
        params = tuple(float(t) for t in tokens[1:])
    except ValueError as exc:
        raise InputError(f"bad number in coefficient term {' '.join(tokens)!r}") from exc
    if kind == "const":
        if len(params) != 1:
            raise InputError("const takes exactly one value")
    elif kind == "poly":
        if len(params) == 0 or len(params) % 3 != 0:
            raise InputError("poly takes coefficient/exponent triples: C I J ...")
        for c, i, j in zip(*[iter(params)] * 3):
            if i != int(i) or j != int(j) or i < 0 or j < 0:
                raise InputError("poly exponents must be nonnegative integers")
    else:
        if len(params) != 4:
            raise InputError("bump takes amplitude, center x, center y, sigma")
        if params[3] <= 0:
            raise InputError("bump sigma must be positive")
    return _Term(kind=kind, params=params)


def parse_coefficient(text: str) -> Coefficient:
    text = text.strip()
    if not text:
        raise InputError("empty coefficient expression")
    terms = []
    for chunk in text.split("+"):
        tokens = chunk.split()
        if not tokens:
            raise InputError(f"malformed coefficient expression {text!r}")
        terms.append(_parse_term(tokens))
    return Coefficient(text=text, terms=tuple(terms))


def interior_sample_points(mesh: TriMesh, n: int = 2048, seed: int = 0):
    """Random points inside the meshed domain via barycentric draws."""
    rng = np.random.default_rng(seed)
    verts = mesh.vertices[mesh.triangles]          # (F, 3, 2)
    e1 = verts[:, 1] - verts[:, 0]
    e2 = verts[:, 2] - verts[:, 0]
    areas = 0.5 * np.abs(e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
    tri = rng.choice(len(areas), size=n, p=areas / areas.sum())
    r1 = np.sqrt(rng.uniform(size=n))
    r2 = rng.uniform(size=n)
    w0, w1, w2 = 1 - r1, r1 * (1 - r2), r1 * r2
    pts = (verts[tri, 0] * w0[:, None] + verts[tri, 1] * w1[:, None]
           + verts[tri, 2] * w2[:, None])
    return pts[:, 0], pts[:, 1]


def boundary_sample_points(mesh: TriMesh, n_per_edge: int = 4, seed: int = 0):
    rng = np.random.default_rng(seed)
    xs, ys = [], []
    for loop in mesh.boundary_loops:
        a = mesh.vertices[loop]
        b = mesh.vertices[np.roll(loop, -1)]
        t = rng.uniform(size=(len(loop), n_per_edge, 1))
        pts = a[:, None, :] * (1 - t) + b[:, None, :] * t
        xs.append(pts[..., 0].ravel())
        ys.append(pts[..., 1].ravel())
    return np.concatenate(xs), np.concatenate(ys)


def validate_nonpositive(coeff: Coefficient, x, y, name: str) -> None:
    vals = coeff(x, y)
    worst = int(np.argmax(vals))
    if vals[worst] > 1e-12:
        raise InputError(
            f"{name} must be <= 0 everywhere; {coeff.text!r} evaluates to "
            f"{vals[worst]:.6g} at ({x[worst]:.4f}, {y[worst]:.4f})"
        )


def interior_coefficient(mesh: TriMesh, text: str, name: str = "h") -> np.ndarray:
    """Parse, validate on interior samples + vertices, evaluate at vertices."""
    coeff = parse_coefficient(text)
    xs, ys = interior_sample_points(mesh)
    xv, yv = mesh.vertices[:, 0], mesh.vertices[:, 1]
    validate_nonpositive(coeff, np.concatenate([xs, xv]), np.concatenate([ys, yv]), name)
    return coeff(xv, yv)


def boundary_coefficient(mesh: TriMesh, text: str, name: str = "lambda") -> np.ndarray:
    """Parse, validate along the boundary, evaluate at boundary vertices.

    Returns a full vertex-length array that is zero at interior vertices.
    """
    coeff = parse_coefficient(text)
    xs, ys = boundary_sample_points(mesh)
    validate_nonpositive(coeff, xs, ys, name)
    out = np.zeros(mesh.num_vertices)
    idx = mesh.boundary_vertices()
    out[idx] = coeff(mesh.vertices[idx, 0], mesh.vertices[idx, 1])
    return out
