"""Convex body descriptions.

A body is the intersection of up to three kinds of constraints on R^n:

* linear:     ``A x < b``
* psd:        ``B - sum_i x_i A_i`` positive definite
* ellipsoids: ``||E_j^{-1} (x - c_j)|| < 1`` for each nonsingular ``E_j``

Membership is always strict.  The origin must be strictly feasible; it is the
canonical starting point for walks and the optimizer.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from .errors import InputError

SYMMETRY_RTOL = 1e-12


@dataclass(frozen=True)
class BarrierWeights:
    """Coefficients of the linear, hyperbolic and generic barrier parts."""

    linear: float = 1.0
    hyperbolic: float = 1.0
    generic: float = 1.0

    @classmethod
    def default(cls, n: int) -> "BarrierWeights":
        return cls(1.0, float(n), float(n) ** 2)

    def __post_init__(self):
        for name in ("linear", "hyperbolic", "generic"):
            w = getattr(self, name)
            if not np.isfinite(w) or w < 0:
                raise InputError(f"weight {name!r} must be finite and >= 0, got {w}")


@dataclass(frozen=True, eq=False)
class Ellipsoid:
    """The open set ``{x : ||E^{-1}(x - center)|| < 1}``."""

    matrix: np.ndarray
    center: np.ndarray
    inverse: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        E = np.array(self.matrix, dtype=float)
        c = np.array(self.center, dtype=float)
        if E.ndim != 2 or E.shape[0] != E.shape[1]:
            raise InputError(f"ellipsoid matrix must be square, got shape {E.shape}")
        if c.shape != (E.shape[0],):
            raise InputError(f"ellipsoid center must have length {E.shape[0]}")
        cond = np.linalg.cond(E)
        if not np.isfinite(cond) or cond > 1e14:
            raise InputError("ellipsoid matrix is singular")
        object.__setattr__(self, "matrix", E)
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "inverse", np.linalg.inv(E))


def _as_matrix(value, name):
    arr = np.array(value, dtype=float)
    if arr.ndim != 2:
        raise InputError(f"{name} must be a 2-D array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InputError(f"{name} has non-finite entries")
    return arr


def _check_symmetric(M, name):
    scale = max(1.0, float(np.max(np.abs(M))))
    if M.shape[0] != M.shape[1] or np.max(np.abs(M - M.T)) > SYMMETRY_RTOL * scale:
        raise InputError(f"{name} is not symmetric")


@dataclass(frozen=True, eq=False)
class BodySpec:
    """Declarative description of a convex body.

    Args:
        dimension: ambient dimension n.
        A, b: linear part ``A x < b`` (``A`` is m x n); both None if absent.
        psd_mats, psd_B: psd part ``sum_i x_i psd_mats[i] < psd_B``; None if absent.
        ellipsoids: tuple of :class:`Ellipsoid`; empty if absent.
        weights: barrier weights; None means the dimension-dependent defaults.
    """

    dimension: int
    A: np.ndarray | None = None
    b: np.ndarray | None = None
    psd_mats: tuple | None = None
    psd_B: np.ndarray | None = None
    ellipsoids: tuple = ()
    weights: BarrierWeights | None = None

    def __post_init__(self):
        n = self.dimension
        if not isinstance(n, (int, np.integer)) or n < 1:
            raise InputError(f"dimension must be a positive integer, got {n!r}")
        object.__setattr__(self, "dimension", int(n))

        if (self.A is None) != (self.b is None):
            raise InputError("linear part needs both A and b")
        if self.A is not None:
            A = _as_matrix(self.A, "linear.A")
            b = np.array(self.b, dtype=float)
            if A.shape[1] != n:
                raise InputError(f"linear.A has {A.shape[1]} columns, expected {n}")
            if b.shape != (A.shape[0],):
                raise InputError(f"linear.b must have length {A.shape[0]}")
            object.__setattr__(self, "A", A)
            object.__setattr__(self, "b", b)

        if (self.psd_mats is None) != (self.psd_B is None):
            raise InputError("psd part needs both Ai and B")
        if self.psd_mats is not None:
            B = _as_matrix(self.psd_B, "psd.B")
            _check_symmetric(B, "psd.B")
            mats = tuple(_as_matrix(M, f"psd.Ai[{i}]") for i, M in enumerate(self.psd_mats))
            if len(mats) != n:
                raise InputError(f"psd.Ai must hold {n} matrices, got {len(mats)}")
            for i, M in enumerate(mats):
                if M.shape != B.shape:
                    raise InputError(f"psd.Ai[{i}] has shape {M.shape}, expected {B.shape}")
                _check_symmetric(M, f"psd.Ai[{i}]")
            object.__setattr__(self, "psd_B", B)
            object.__setattr__(self, "psd_mats", mats)
            # stacked (n, k, k) copy for vectorised assembly
            object.__setattr__(self, "_psd_stack", np.stack(mats))

        ells = tuple(self.ellipsoids)
        for j, e in enumerate(ells):
            if not isinstance(e, Ellipsoid):
                raise InputError(f"ellipsoids[{j}] is not an Ellipsoid")
            if e.matrix.shape[0] != n:
                raise InputError(f"ellipsoids[{j}] has dimension {e.matrix.shape[0]}, expected {n}")
        object.__setattr__(self, "ellipsoids", ells)

        if not (self.has_linear or self.has_psd or self.has_ellipsoids):
            raise InputError("body has no constraint parts")

        w = self.weights if self.weights is not None else BarrierWeights.default(n)
        self.check_weights(w)
        object.__setattr__(self, "weights", w)

        origin = np.zeros(n)
        if self.has_linear and not np.all(self.b > 0):
            bad = int(np.argmin(self.b))
            raise InputError(f"origin is infeasible: linear.b[{bad}] = {self.b[bad]} <= 0")
        if self.has_psd and not _is_pd(self.psd_B):
            raise InputError("origin is infeasible: psd.B is not positive definite")
        for j, e in enumerate(self.ellipsoids):
            if np.sum((e.inverse @ (origin - e.center)) ** 2) >= 1:
                raise InputError(f"origin is infeasible: outside ellipsoids[{j}]")

    def check_weights(self, w: BarrierWeights) -> None:
        """Reject weights that switch off every part present in this body."""
        active = []
        if self.has_linear:
            active.append(w.linear)
        if self.has_psd or self.has_ellipsoids:
            active.append(w.hyperbolic)
        if all(a == 0 for a in active):
            raise InputError("all barrier weights of the present parts are zero")

    # -- structure ---------------------------------------------------------

    @property
    def n(self) -> int:
        return self.dimension

    @property
    def has_linear(self) -> bool:
        return self.A is not None and self.A.shape[0] > 0

    @property
    def has_psd(self) -> bool:
        return self.psd_mats is not None

    @property
    def has_ellipsoids(self) -> bool:
        return len(self.ellipsoids) > 0

    @property
    def m(self) -> int:
        """Number of linear constraints."""
        return self.A.shape[0] if self.has_linear else 0

    @property
    def psd_size(self) -> int:
        return self.psd_B.shape[0] if self.has_psd else 0

    @property
    def nu_h(self) -> int:
        """Hyperbolic parameter: psd size plus 2 per ellipsoid."""
        return self.psd_size + 2 * len(self.ellipsoids)

    # -- membership --------------------------------------------------------

    def _check_point(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dimension,):
            raise InputError(f"point has shape {x.shape}, expected ({self.dimension},)")
        return x

    def psd_slack(self, x) -> np.ndarray:
        return self.psd_B - np.tensordot(x, self._psd_stack, axes=1)

    def contains(self, x) -> bool:
        x = self._check_point(x)
        if not np.all(np.isfinite(x)):
            raise InputError("point has non-finite entries")
        if self.has_linear and not np.all(self.A @ x < self.b):
            return False
        for e in self.ellipsoids:
            u = e.inverse @ (x - e.center)
            if u @ u >= 1.0:
                return False
        if self.has_psd and not _is_pd(self.psd_slack(x)):
            return False
        return True

    def contains_many(self, X) -> np.ndarray:
        """Row-wise :meth:`contains` for an ``(N, n)`` array."""
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.dimension:
            raise InputError(f"points have shape {X.shape}, expected (N, {self.dimension})")
        ok = np.all(np.isfinite(X), axis=1)
        if self.has_linear:
            ok &= np.all(X @ self.A.T < self.b, axis=1)
        for e in self.ellipsoids:
            U = (X - e.center) @ e.inverse.T
            ok &= np.einsum("ij,ij->i", U, U) < 1.0
        if self.has_psd:
            idx = np.flatnonzero(ok)
            if idx.size:
                S = self.psd_B - np.tensordot(X[idx], self._psd_stack, axes=1)
                ok[idx] = np.linalg.eigvalsh(S)[:, 0] > 0
        return ok

    def ray_interval(self, x, d) -> tuple[float, float]:
        """Exact ``(t_lo, t_hi)`` with ``x + t d`` interior iff ``t_lo < t < t_hi``.

        ``x`` must be interior.  Infinite ends mean the ray never leaves.
        """
        x = self._check_point(x)
        d = np.asarray(d, dtype=float)
        lo, hi = -np.inf, np.inf
        if self.has_linear:
            slack = self.b - self.A @ x
            rate = self.A @ d
            pos = rate > 0
            neg = rate < 0
            if np.any(pos):
                hi = min(hi, float(np.min(slack[pos] / rate[pos])))
            if np.any(neg):
                lo = max(lo, float(np.max(slack[neg] / rate[neg])))
        for e in self.ellipsoids:
            u = e.inverse @ (x - e.center)
            w = e.inverse @ d
            a = w @ w
            if a == 0:
                continue
            half_b = u @ w
            c = u @ u - 1.0
            disc = np.sqrt(half_b * half_b - a * c)
            # stable root pair of a t^2 + 2 half_b t + c
            q = -(half_b + np.copysign(disc, half_b)) if half_b != 0 else disc
            r1 = q / a
            r2 = c / q
            lo = max(lo, min(r1, r2))
            hi = min(hi, max(r1, r2))
        if self.has_psd:
            S = self.psd_slack(x)
            D = np.tensordot(d, self._psd_stack, axes=1)
            L = np.linalg.cholesky(S)
            Linv = np.linalg.inv(L)
            lam = np.linalg.eigvalsh(Linv @ D @ Linv.T)
            if lam[-1] > 0:
                hi = min(hi, 1.0 / lam[-1])
            if lam[0] < 0:
                lo = max(lo, 1.0 / lam[0])
        return float(lo), float(hi)

    # -- transforms --------------------------------------------------------

    def affine_image(self, M, t) -> "BodySpec":
        """Body ``{M x + t : x in self}`` with barrier ``F(M^{-1}(y - t))``.

        Requires the image to keep the origin strictly interior.
        """
        M = np.asarray(M, dtype=float)
        t = np.asarray(t, dtype=float)
        Minv = np.linalg.inv(M)
        kw: dict[str, Any] = {"weights": self.weights}
        if self.has_linear:
            A2 = self.A @ Minv
            kw["A"] = A2
            kw["b"] = self.b + A2 @ t
        if self.has_psd:
            # x = Minv (y - t):  sum_i x_i A_i = sum_k y_k A'_k - sum_i (Minv t)_i A_i
            shift = Minv @ t
            stack = self._psd_stack
            kw["psd_mats"] = tuple(np.tensordot(Minv[:, k], stack, axes=1) for k in range(self.n))
            kw["psd_B"] = self.psd_B + np.tensordot(shift, stack, axes=1)
        kw["ellipsoids"] = tuple(Ellipsoid(M @ e.matrix, M @ e.center + t) for e in self.ellipsoids)
        return BodySpec(self.n, **kw)

    def to_dict(self) -> dict:
        doc: dict[str, Any] = {"dimension": self.n}
        if self.has_linear:
            doc["linear"] = {"A": self.A.tolist(), "b": self.b.tolist()}
        if self.has_psd:
            doc["psd"] = {"Ai": [M.tolist() for M in self.psd_mats], "B": self.psd_B.tolist()}
        if self.has_ellipsoids:
            doc["ellipsoids"] = [
                {"A": e.matrix.tolist(), "center": e.center.tolist()} for e in self.ellipsoids
            ]
        w = self.weights
        doc["weights"] = {"l": w.linear, "h": w.hyperbolic, "s": w.generic}
        return doc


def _is_pd(S) -> bool:
    try:
        L = np.linalg.cholesky(S)
    except np.linalg.LinAlgError:
        return False
    return bool(np.all(np.diag(L) > 0))


# ---------------------------------------------------------------------------
# constructors


def cube(n: int, half_width: float = 1.0) -> BodySpec:
    """The box ``[-half_width, half_width]^n``."""
    # rows e_1, -e_1, e_2, -e_2, ... to match a product of intervals
    A = np.kron(np.eye(n), np.array([[1.0], [-1.0]]))
    return BodySpec(n, A=A, b=np.full(2 * n, float(half_width)))


def ball(n: int, radius: float = 1.0, center=None) -> BodySpec:
    c = np.zeros(n) if center is None else np.asarray(center, dtype=float)
    return BodySpec(n, ellipsoids=(Ellipsoid(radius * np.eye(n), c),))


def product_body(factor: BodySpec, copies: int) -> BodySpec:
    """Direct product of ``copies`` copies of ``factor`` (block-diagonal constraints).

    Ellipsoid constraints of the factor are embedded as psd arrow blocks
    ``[[1, u^T], [u, I]]``, whose log-determinant equals ``ln(1 - ||u||^2)``.
    The product carries the factor's weights, so its barrier is the sum of the
    factor barriers.
    """
    if copies < 1:
        raise InputError("copies must be >= 1")
    if copies == 1:
        return factor
    n1 = factor.n
    n = n1 * copies
    kw: dict[str, Any] = {"weights": factor.weights}
    if factor.has_linear:
        blocks = np.zeros((factor.m * copies, n))
        for h in range(copies):
            blocks[h * factor.m:(h + 1) * factor.m, h * n1:(h + 1) * n1] = factor.A
        kw["A"] = blocks
        kw["b"] = np.tile(factor.b, copies)

    # per-factor psd blocks: (list of n1 matrices, B)
    psd_blocks = []
    if factor.has_psd:
        psd_blocks.append((list(factor.psd_mats), factor.psd_B))
    for e in factor.ellipsoids:
        k = n1 + 1
        # u = Einv x - Einv c;  arrow(u) = B0 - sum_i x_i A_i
        B0 = np.eye(k)
        u0 = -e.inverse @ e.center
        B0[0, 1:] = u0
        B0[1:, 0] = u0
        mats = []
        for i in range(n1):
            Ai = np.zeros((k, k))
            Ai[0, 1:] = -e.inverse[:, i]
            Ai[1:, 0] = -e.inverse[:, i]
            mats.append(Ai)
        psd_blocks.append((mats, B0))
    if psd_blocks:
        k1 = sum(B.shape[0] for _, B in psd_blocks)
        K = k1 * copies
        big_B = np.zeros((K, K))
        big_mats = [np.zeros((K, K)) for _ in range(n)]
        off = 0
        for h in range(copies):
            for mats, B in psd_blocks:
                k = B.shape[0]
                sl = slice(off, off + k)
                big_B[sl, sl] = B
                for i in range(n1):
                    big_mats[h * n1 + i][sl, sl] = mats[i]
                off += k
        kw["psd_mats"] = tuple(big_mats)
        kw["psd_B"] = big_B
    return BodySpec(n, **kw)


# ---------------------------------------------------------------------------
# JSON documents

_TOP_KEYS = {"dimension", "linear", "psd", "ellipsoids", "weights"}


def _require_keys(obj, allowed, path):
    if not isinstance(obj, Mapping):
        raise InputError(f"{path}: expected an object")
    unknown = set(obj) - set(allowed)
    if unknown:
        raise InputError(f"{path}: unknown field(s) {sorted(unknown)}")


def _field_error(path, exc):
    return InputError(f"{path}: {exc}")


def parse_body_spec(document: Mapping | str) -> BodySpec:
    """Validate a body document (mapping or JSON text) and build a :class:`BodySpec`.

    Raises:
        InputError: with a field path for schema violations, shape mismatches,
            asymmetric matrices and an infeasible origin.
    """
    if isinstance(document, str):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise InputError(f"invalid JSON: {exc}") from exc
    _require_keys(document, _TOP_KEYS, "$")
    if "dimension" not in document:
        raise InputError("dimension: required field missing")
    n = document["dimension"]
    if isinstance(n, bool) or not isinstance(n, int) or n < 1:
        raise InputError(f"dimension: must be a positive integer, got {n!r}")

    kw: dict[str, Any] = {}
    if "linear" in document:
        lin = document["linear"]
        _require_keys(lin, {"A", "b"}, "linear")
        for key in ("A", "b"):
            if key not in lin:
                raise InputError(f"linear.{key}: required field missing")
        try:
            A = _as_matrix(lin["A"], "A")
        except (InputError, ValueError, TypeError) as exc:
            raise _field_error("linear.A", exc) from exc
        if A.shape[1] != n:
            raise InputError(f"linear.A: has {A.shape[1]} columns, expected {n}")
        try:
            b = np.array(lin["b"], dtype=float)
        except (ValueError, TypeError) as exc:
            raise _field_error("linear.b", exc) from exc
        if b.shape != (A.shape[0],):
            raise InputError(f"linear.b: must have length {A.shape[0]}")
        if not np.all(b > 0):
            bad = int(np.argmin(b))
            raise InputError(f"linear.b: origin is infeasible (b[{bad}] = {b[bad]} <= 0)")
        kw["A"], kw["b"] = A, b

    if "psd" in document:
        psd = document["psd"]
        _require_keys(psd, {"Ai", "B"}, "psd")
        for key in ("Ai", "B"):
            if key not in psd:
                raise InputError(f"psd.{key}: required field missing")
        try:
            B = _as_matrix(psd["B"], "B")
        except (InputError, ValueError, TypeError) as exc:
            raise _field_error("psd.B", exc) from exc
        _check_symmetric_at(B, "psd.B")
        if not isinstance(psd["Ai"], Sequence) or len(psd["Ai"]) != n:
            raise InputError(f"psd.Ai: must be a list of {n} matrices")
        mats = []
        for i, M in enumerate(psd["Ai"]):
            path = f"psd.Ai[{i}]"
            try:
                M = _as_matrix(M, "matrix")
            except (InputError, ValueError, TypeError) as exc:
                raise _field_error(path, exc) from exc
            if M.shape != B.shape:
                raise InputError(f"{path}: shape {M.shape} does not match psd.B {B.shape}")
            _check_symmetric_at(M, path)
            mats.append(M)
        if not _is_pd(B):
            raise InputError("psd.B: origin is infeasible (B is not positive definite)")
        kw["psd_mats"], kw["psd_B"] = tuple(mats), B

    if "ellipsoids" in document:
        ells = document["ellipsoids"]
        if not isinstance(ells, Sequence):
            raise InputError("ellipsoids: expected a list")
        out = []
        for j, e in enumerate(ells):
            path = f"ellipsoids[{j}]"
            _require_keys(e, {"A", "center"}, path)
            try:
                ell = Ellipsoid(np.array(e["A"], dtype=float), np.array(e["center"], dtype=float))
            except KeyError as exc:
                raise InputError(f"{path}.{exc.args[0]}: required field missing") from exc
            except (InputError, ValueError, TypeError) as exc:
                raise _field_error(path, exc) from exc
            if ell.matrix.shape[0] != n:
                raise InputError(f"{path}.A: dimension {ell.matrix.shape[0]}, expected {n}")
            if np.sum((ell.inverse @ ell.center) ** 2) >= 1:
                raise InputError(f"{path}: origin is infeasible")
            out.append(ell)
        kw["ellipsoids"] = tuple(out)

    if "weights" in document:
        wdoc = document["weights"]
        _require_keys(wdoc, {"l", "h", "s"}, "weights")
        d = BarrierWeights.default(n)
        try:
            kw["weights"] = BarrierWeights(
                float(wdoc.get("l", d.linear)),
                float(wdoc.get("h", d.hyperbolic)),
                float(wdoc.get("s", d.generic)),
            )
        except (InputError, ValueError, TypeError) as exc:
            raise _field_error("weights", exc) from exc

    return BodySpec(n, **kw)


def _check_symmetric_at(M, path):
    try:
        _check_symmetric(M, "matrix")
    except InputError:
        raise InputError(f"{path}: matrix is not symmetric") from None


def load_body(path: str | Path) -> BodySpec:
    text = Path(path).read_text()
    return parse_body_spec(text)


def example_names() -> list[str]:
    root = resources.files(__package__) / "bodies"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def example_path(name: str) -> Path:
    """Filesystem path of a bundled example body, for passing to the CLI."""
    if name not in example_names():
        raise InputError(f"unknown example {name!r}; choose from {example_names()}")
    return Path(str(resources.files(__package__) / "bodies" / f"{name}.json"))


def load_example(name: str) -> BodySpec:
    """Load one of the bundled example bodies by name (see :func:`example_names`)."""
    return load_body(example_path(name))
