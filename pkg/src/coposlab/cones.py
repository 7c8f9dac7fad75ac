"""Membership tests, certificates and refutations for the matrix cone chain

    COP  >=  SPN  >=  PSD u NN  >=  DNN  >=  CP

together with the inner sums-of-squares hierarchy K^(r) approximating COP.
Every positive answer carries a certificate that can be re-checked without
the solver (factor, decomposition pair, Gram matrix, or witness vector);
every negative answer carries a refutation (separating matrix, improving
dual ray, or an explicit vector with negative quadratic value).

COP and CP membership are undecidable at practical cost in general, so the
module deliberately offers one-sided machinery for them: inner certificates
via the hierarchy, outer refutations via simplex minimization (COP) or
separating hierarchy directions (CP).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Tuple, Union

import numpy as np

from .numerics import (CholeskyFactor, NegVector, QSqrt2, SymMatrix,
                       psd_certificate)
from .quartic import monomials, poly_mul, sum_of_squares_poly
from .sdp import (BasisDeficiencyError, DualRay, LinExpr, SdpProblem,
                  SdpStatus, SdpSolution, gram_form_coeffs, sdp_solve,
                  sos_gram_assemble)

BASIC_CONES = ("nn", "psd", "dnn")
ALL_CONES = ("nn", "psd", "dnn", "spn", "cop", "cp")


@dataclass(frozen=True)
class ConeId:
    """One of nn / psd / dnn / spn / cop / cp, or the hierarchy cone K^(r)."""

    tag: str
    level: Optional[int] = None

    def __post_init__(self):
        if self.tag == "parrilo":
            if self.level is None or self.level < 0:
                raise ValueError("parrilo cone needs level r >= 0")
        elif self.tag not in ALL_CONES:
            raise ValueError(f"unknown cone tag {self.tag!r}")
        elif self.level is not None:
            raise ValueError("level only valid for the parrilo tag")


# ---------------------------------------------------------------------------
# certificates
# ---------------------------------------------------------------------------

@dataclass
class SpnPair:
    p: np.ndarray  # PSD part
    n: np.ndarray  # entrywise nonnegative part

    def check(self, a: np.ndarray, tol: float) -> bool:
        if np.abs(self.p + self.n - a).max() > 10 * tol * (1.0 + np.abs(a).max()):
            return False
        if self.n.min() < -tol:
            return False
        return isinstance(psd_certificate(self.p, max(tol, 1e-12)), CholeskyFactor)


@dataclass
class SosGram:
    basis: List[Tuple[int, ...]]
    gram: np.ndarray

    def residual(self, target: Dict[Tuple[int, ...], float]) -> float:
        got = gram_form_coeffs(self.basis, self.gram)
        keys = set(got) | set(target)
        return max(abs(got.get(k, 0.0) - float(target.get(k, 0))) for k in keys)

    def check(self, target: Dict[Tuple[int, ...], float], tol: float) -> bool:
        if not isinstance(psd_certificate(self.gram, max(tol, 1e-12)), CholeskyFactor):
            return False
        scale = 1.0 + max((abs(float(v)) for v in target.values()), default=0.0)
        return self.residual(target) <= tol * scale


@dataclass
class InfeasibilityCert:
    """Improving dual ray; `separator` is the cone-side matrix when meaningful.

    For SPN refutations the separator M is doubly nonnegative with <A, M> < 0;
    for SOS refutations the ray is a moment-type functional that is
    nonnegative on the basis squares but negative on the target.
    """

    ray: DualRay
    separator: Optional[np.ndarray] = None
    note: str = ""


@dataclass
class CopRefutation:
    x: tuple  # rational vector in the simplex
    value: object  # exact x^T A x < 0

    def check_exact(self, a: SymMatrix) -> bool:
        n = a.n
        acc = None
        exact = a.flavor == "exact"
        for i in range(n):
            for j in range(n):
                aij = a[i, j] if exact else Fraction(float(a[i, j]))
                t = self.x[i] * aij * self.x[j]
                acc = t if acc is None else acc + t
        if isinstance(acc, QSqrt2):
            return acc.sign() < 0
        return acc < 0


@dataclass
class CpRefutation:
    m: np.ndarray                       # separating matrix, <A, M> < 0
    pairing: float
    level: int
    certificate: Union[SosGram, SpnPair]  # hierarchy certificate for M


Certificate = Union[CholeskyFactor, NegVector, SpnPair, SosGram,
                    InfeasibilityCert, CopRefutation, CpRefutation, dict, None]


# ---------------------------------------------------------------------------
# basic operations
# ---------------------------------------------------------------------------

def horn_matrix() -> SymMatrix:
    """The 5x5 +-1 matrix that is copositive but not a PSD + NN sum."""
    h = [[1, -1, 1, 1, -1],
         [-1, 1, -1, 1, 1],
         [1, -1, 1, -1, 1],
         [1, 1, -1, 1, -1],
         [-1, 1, 1, -1, 1]]
    return SymMatrix(h, "exact")


def frobenius(a: SymMatrix, b: SymMatrix):
    """Trace pairing <A,B> = sum_ij A_ij B_ij; exact when both are exact."""
    if a.n != b.n:
        raise ValueError("dimension mismatch")
    if a.flavor == "exact" and b.flavor == "exact":
        acc = QSqrt2.of(0)
        for i in range(a.n):
            for j in range(a.n):
                acc = acc + a[i, j] * b[i, j]
        return acc
    return float((a.to_numpy() * b.to_numpy()).sum())


def membership_basic(a: SymMatrix, cone: str, tol: float = 1e-9):
    """Membership in NN / PSD / DNN with a re-checkable certificate."""
    if cone not in BASIC_CONES:
        raise ValueError(f"cone must be one of {BASIC_CONES}")
    arr = a.to_numpy()
    if cone == "nn":
        mn = float(arr.min())
        if mn >= -tol:
            return True, {"kind": "nn", "min_entry": mn}
        ij = np.unravel_index(int(np.argmin(arr)), arr.shape)
        return False, {"kind": "nn", "min_entry": mn, "position": tuple(int(v) for v in ij)}
    if cone == "psd":
        cert = psd_certificate(arr, tol)
        return isinstance(cert, CholeskyFactor), cert
    ok_nn, cert_nn = membership_basic(a, "nn", tol)
    ok_psd, cert_psd = membership_basic(a, "psd", tol)
    return ok_nn and ok_psd, {"kind": "dnn", "nn": cert_nn, "psd": cert_psd}


# ---------------------------------------------------------------------------
# SPN via feasibility SDP
# ---------------------------------------------------------------------------

def _upper_index(n: int):
    pairs = [(i, j) for i in range(n) for j in range(i, n)]
    return pairs, {p: k for k, p in enumerate(pairs)}


def spn_decompose(a: SymMatrix, tol: float = 1e-9):
    """Split A = P + N with P PSD and N >= 0, or produce a separating matrix.

    Infeasibility yields M in DNN with <A, M> < 0 (the dual ray), which
    refutes membership against every conceivable P + N split.
    """
    n = a.n
    arr = a.to_numpy()
    pairs, _ = _upper_index(n)
    prob = SdpProblem(psd_block_dims=[n], nonneg_dim=len(pairs))
    for k, (i, j) in enumerate(pairs):
        expr = LinExpr().add_psd_entry(0, i, j, 1.0).add_nonneg(k, 1.0)
        prob.constraints.append((expr, float(arr[i, j])))
    sol = sdp_solve(prob, tol=tol)
    if sol.status in (SdpStatus.FEASIBLE_POINT, SdpStatus.OPTIMAL):
        p = sol.psd_blocks[0]
        nm = np.zeros((n, n))
        for k, (i, j) in enumerate(pairs):
            nm[i, j] = nm[j, i] = sol.nonneg[k]
        return SpnPair(p=p, n=nm)
    if sol.status == SdpStatus.INFEASIBLE:
        y = sol.dual_ray.y
        m = np.zeros((n, n))
        for k, (i, j) in enumerate(pairs):
            v = -y[k]
            if i == j:
                m[i, i] = v
            else:
                m[i, j] = m[j, i] = v / 2.0
        return InfeasibilityCert(ray=sol.dual_ray, separator=m,
                                 note="M is DNN with <A, M> = -1")
    raise _indeterminate(sol)


def _indeterminate(sol: SdpSolution) -> RuntimeError:
    return RuntimeError(f"solver indeterminate: {sol.message} (residuals {sol.residuals})")


# ---------------------------------------------------------------------------
# the SOS hierarchy
# ---------------------------------------------------------------------------

def quartic_target(a: SymMatrix, r: int) -> Dict[Tuple[int, ...], object]:
    """Coefficient map of (sum_i x_i^2)^r * q_A."""
    n = a.n
    q: Dict[Tuple[int, ...], object] = {}
    exact = a.flavor == "exact"
    for i in range(n):
        for j in range(i, n):
            v = a[i, j]
            if exact:
                if isinstance(v, QSqrt2):
                    if v.is_zero():
                        continue
                    coef = float(v) if not v.is_rational() else v.rat
                else:
                    coef = v
            else:
                coef = float(v)
            if coef == 0:
                continue
            key = tuple((2 if t == i else 0) + (2 if t == j else 0) for t in range(n))
            q[key] = coef if i == j else 2 * coef
    out = q
    for _ in range(r):
        out = poly_mul(out, sum_of_squares_poly(n))
    return out


def parrilo_member(a: SymMatrix, r: int, tol: float = 1e-9):
    """Decide whether (sum x_i^2)^r q_A is a sum of squares.

    Level 0 coincides with the SPN split; level 1 already contains the Horn
    matrix.  Returns a Gram certificate over the full homogeneous monomial
    basis of degree r + 2, or the separating moment functional.
    """
    if r < 0:
        raise ValueError("r must be >= 0")
    n = a.n
    target = quartic_target(a, r)
    basis = monomials(n, r + 2)
    try:
        prob = sos_gram_assemble(target, basis)
    except BasisDeficiencyError as exc:
        ray = DualRay(y=np.zeros(0), psd_operators=[], nonneg_part=np.zeros(0),
                      free_part=np.zeros(0))
        return InfeasibilityCert(ray=ray, note=f"structural: monomial {exc.monomial} unreachable")
    sol = sdp_solve(prob, tol=tol)
    if sol.status in (SdpStatus.FEASIBLE_POINT, SdpStatus.OPTIMAL):
        return SosGram(basis=basis, gram=sol.psd_blocks[0])
    if sol.status == SdpStatus.INFEASIBLE:
        return InfeasibilityCert(ray=sol.dual_ray,
                                 note="moment functional separating the target from SOS")
    raise _indeterminate(sol)


# ---------------------------------------------------------------------------
# copositivity refutation: simplex minimization
# ---------------------------------------------------------------------------

def _project_simplex(v: np.ndarray) -> np.ndarray:
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, len(v) + 1)
    cond = u - css / idx > 0
    rho = int(np.nonzero(cond)[0][-1]) + 1
    theta = css[rho - 1] / rho
    return np.clip(v - theta, 0.0, None)


def cop_refute(a: SymMatrix, attempts: int = 64, seed: int = 0,
               tol: float = 1e-9) -> Optional[CopRefutation]:
    """Search for x >= 0 with x^T A x < 0; absence is not a copositivity proof.

    Combines an exhaustive scan of 0/1-support vertices (supports up to size
    min(n, 6)) with seeded multi-start projected-gradient descent on the
    simplex.  A returned witness is re-verified in exact rational arithmetic.
    """
    if attempts < 1:
        raise ValueError("attempts must be >= 1")
    n = a.n
    arr = a.to_numpy()
    best_x, best_v = None, -tol

    for size in range(1, min(n, 6) + 1):
        for sup in itertools.combinations(range(n), size):
            x = np.zeros(n)
            x[list(sup)] = 1.0 / size
            v = float(x @ arr @ x)
            if v < best_v:
                best_x, best_v = x, v

    rng = np.random.RandomState(seed)
    lip = float(np.abs(arr).sum(axis=1).max())  # row-sum bound on ||A||_2
    eta = 0.5 / max(lip, 1e-12)
    for _ in range(attempts):
        x = rng.exponential(size=n)
        x /= x.sum()
        for _ in range(250):
            x = _project_simplex(x - eta * 2.0 * (arr @ x))
        v = float(x @ arr @ x)
        if v < best_v:
            best_x, best_v = x, v

    if best_x is None:
        return None
    # rationalize and certify exactly
    for den in (10 ** 6, 10 ** 12):
        xr = tuple(Fraction(float(t)).limit_denominator(den) for t in best_x)
        cert = CopRefutation(x=xr, value=_exact_quadratic(a, xr))
        val = cert.value
        neg = val.sign() < 0 if isinstance(val, QSqrt2) else val < 0
        if neg:
            return cert
    return None


def _exact_quadratic(a: SymMatrix, x: tuple):
    n = a.n
    exact = a.flavor == "exact"
    acc = None
    for i in range(n):
        for j in range(n):
            aij = a[i, j] if exact else Fraction(float(a[i, j]))
            t = x[i] * aij * x[j]
            acc = t if acc is None else acc + t
    return acc


# ---------------------------------------------------------------------------
# complete-positivity refutation via hierarchy separators
# ---------------------------------------------------------------------------

def _cp_threshold(arr: np.ndarray, tol: float) -> float:
    # a refutation must be negative beyond solver noise: boundary-CP inputs
    # (rank-one J, say) have a true optimum of zero that the solver reports
    # as a tiny negative number
    return max(100.0 * tol, 1e-6) * (1.0 + float(np.abs(arr).max()))


def cp_refute(a: SymMatrix, r: int = 1, tol: float = 1e-8) -> Optional[CpRefutation]:
    """Minimize <A, M> over M in K^(r) with <M, I + J> = 1.

    A strictly negative optimum separates A from the completely positive
    cone (CP is dual to COP and K^(r) sits inside COP); the witness M ships
    with its own hierarchy certificate.  Returns None when the optimum is
    not negative beyond solver resolution.
    """
    if r not in (0, 1):
        raise ValueError("r must be 0 or 1 at desk scale")
    n = a.n
    arr = a.to_numpy()
    pairs, _ = _upper_index(n)

    if r == 0:
        # M = P + N with the normalization <P + N, I + J> = 1
        prob = SdpProblem(psd_block_dims=[n], nonneg_dim=len(pairs))
        norm = LinExpr()
        obj = LinExpr()
        for k, (i, j) in enumerate(pairs):
            w = 2.0  # I + J weighs diagonal 2 and each unordered off pair 2
            norm.add_psd_entry(0, i, j, w)
            norm.add_nonneg(k, w)
            ow = float(arr[i, j]) * (1.0 if i == j else 2.0)
            obj.add_psd_entry(0, i, j, ow)
            obj.add_nonneg(k, ow)
        prob.constraints.append((norm, 1.0))
        prob.objective = obj
        sol = sdp_solve(prob, tol=tol)
        if sol.status != SdpStatus.OPTIMAL:
            raise _indeterminate(sol)
        if sol.objective_value >= -_cp_threshold(arr, tol):
            return None
        p = sol.psd_blocks[0]
        nm = np.zeros((n, n))
        for k, (i, j) in enumerate(pairs):
            nm[i, j] = nm[j, i] = max(sol.nonneg[k], 0.0)
        m = p + nm
        return CpRefutation(m=m, pairing=float((arr * m).sum()), level=0,
                            certificate=SpnPair(p=p, n=nm))

    # r = 1: M free, B PSD over degree-3 monomials, (sum x^2) q_M = w^T B w
    basis = monomials(n, 3)
    prob = SdpProblem(psd_block_dims=[len(basis)], free_dim=len(pairs))
    products: Dict[Tuple[int, ...], List[Tuple[int, int]]] = {}
    for i in range(len(basis)):
        for j in range(i, len(basis)):
            g = tuple(x + y for x, y in zip(basis[i], basis[j]))
            products.setdefault(g, []).append((i, j))
    # coefficient of gamma in (sum_k x_k^2) q_M as a functional of M entries
    mcoef: Dict[Tuple[int, ...], Dict[int, float]] = {}
    for kidx, (i, j) in enumerate(pairs):
        base = [0] * n
        base[i] += 2
        base[j] += 2
        w = 1.0 if i == j else 2.0
        for k in range(n):
            g = list(base)
            g[k] += 2
            dd = mcoef.setdefault(tuple(g), {})
            dd[kidx] = dd.get(kidx, 0.0) + w
    gammas = sorted(set(products) | set(mcoef), reverse=True)
    for g in gammas:
        expr = LinExpr()
        for (i, j) in products.get(g, []):
            expr.add_psd_entry(0, i, j, 1.0 if i == j else 2.0)
        for kidx, w in mcoef.get(g, {}).items():
            expr.add_free(kidx, -w)
        if not expr.is_zero():
            prob.constraints.append((expr, 0.0))
    norm = LinExpr()
    obj = LinExpr()
    for k, (i, j) in enumerate(pairs):
        norm.add_free(k, 2.0)
        obj.add_free(k, float(arr[i, j]) if i == j else 2.0 * float(arr[i, j]))
    prob.constraints.append((norm, 1.0))
    prob.objective = obj
    sol = sdp_solve(prob, tol=tol)
    if sol.status != SdpStatus.OPTIMAL:
        raise _indeterminate(sol)
    if sol.objective_value >= -_cp_threshold(arr, tol):
        return None
    m = np.zeros((n, n))
    for k, (i, j) in enumerate(pairs):
        m[i, j] = m[j, i] = sol.free[k]
    return CpRefutation(m=m, pairing=float((arr * m).sum()), level=1,
                        certificate=SosGram(basis=basis, gram=sol.psd_blocks[0]))
