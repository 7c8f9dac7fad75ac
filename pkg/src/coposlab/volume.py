"""Volume radii of the compact cone sections inside the zero-average space M.

Each cone of even quartics is cut by the average-one hyperplane and the
section is translated by -(sum x_i^2)^2, landing in the hyperplane M of
average-zero even quartics (dimension n(n+1)/2 - 1).  The sections are
star-shaped (convex) around any interior point, so volumes follow from the
radial function: Vol = Vol(B_d) E[r(theta)^d] over uniform directions.

The star center used everywhere is the section point of I + J/n: entrywise
positive and strictly diagonally dominant, hence interior to the completely
positive cone and to every cone containing it.  For the linear-forms cone
the center is the average of the sampled fourth-power generators.

Exactness policy: NN sections are simplices and get an exact volume via a
rational Gram determinant; PSD/DNN radii are eigenvalue computations; SPN
radii solve one small SDP per ray; COP/CP at n >= 5 are reported as
inner/outer pairs only (membership there is NP-hard, and pretending
otherwise would be false precision).
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import permutations
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import linprog

from .cones import cop_refute, cp_refute, parrilo_member, spn_decompose, SosGram, SpnPair
from .numerics import SymMatrix
from .quartic import (EvenQuartic, basis_M, coeff_vector, dim_M, l2_inner,
                      _l2_gram_float, r_squared)

SECTION_CONES = ("nn", "psd", "dnn", "spn", "cop", "cp", "lf", "ball")


@dataclass
class VradEstimate:
    cone: str
    n: int
    mode: Optional[str]
    point_estimate: float
    ci_low: float
    ci_high: float
    samples: int
    seed: int
    dim: int

    def to_json_dict(self) -> dict:
        return {"cone": self.cone, "n": self.n, "mode": self.mode,
                "estimate": self.point_estimate,
                "ci": [self.ci_low, self.ci_high],
                "samples": self.samples, "seed": self.seed, "dim": self.dim}


# ---------------------------------------------------------------------------
# section specification and membership oracle
# ---------------------------------------------------------------------------

def _center_matrix(n: int) -> np.ndarray:
    # I + J/n normalized to sphere average one
    scale = n * (n + 2) / (4.0 * n + 2.0)
    return scale * (np.eye(n) + np.ones((n, n)) / n)


def lf_generators(n: int, count: int, seed: int) -> np.ndarray:
    """Coefficient matrices of fourth-power generators, closed under
    coordinate permutations so the signed-permutation action preserves the
    sampled inner hull.  Returns an array of shape (N, n, n) with N >= count.
    """
    rng = np.random.RandomState(seed)
    vecs: List[Tuple[float, ...]] = []
    for i in range(n):
        e = [0.0] * n
        e[i] = 1.0
        vecs.append(tuple(e))
    vecs.append(tuple([1.0 / math.sqrt(n)] * n))
    while len(vecs) < count:
        v = rng.standard_normal(n)
        v /= np.linalg.norm(v)
        orbit = {tuple(v[list(p)]) for p in permutations(range(n))}
        vecs.extend(sorted(orbit))
    mats = []
    for v in vecs:
        sq = np.array(v) ** 2
        m = 3.0 * np.outer(sq, sq) - 2.0 * np.diag(sq * sq)
        mats.append(m)
    return np.array(mats)


def _pos_samples(n: int, count: int, seed: int) -> List[np.ndarray]:
    """Coefficient matrices of nonnegative forms used by the LF outer test."""
    rng = np.random.RandomState(seed)
    out = []
    for i in range(n):
        for j in range(i, n):
            m = np.zeros((n, n))
            m[i, j] = m[j, i] = 1.0
            out.append(m)  # the monomial x_i^2 x_j^2
    while len(out) < count:
        b = rng.standard_normal(n)
        out.append(np.outer(b, b) * 1.0)  # (sum b_k x_k^2)^2 is a square
        g = rng.standard_normal((n, n))
        p = g @ g.T
        out.append(p)  # q_P with P PSD is a square of quadratics
    return out


def _diff_pairing(a: np.ndarray, b: np.ndarray) -> float:
    """Apolar pairing of even quartics: 24 sum diag + 16 sum upper products."""
    return float(8.0 * (a * b).sum() + 16.0 * (np.diag(a) @ np.diag(b)))


@dataclass
class SectionSpec:
    """Which cone section to study, with the oracle mode and star center.

    Modes: the polyhedral/spectrahedral cones (nn, psd, dnn, spn) are decided
    exactly at tolerance; cop and cp require mode "exact" (n <= 4 only,
    where the hierarchy collapses), "inner" or "outer"; lf requires "inner"
    (conic hull of sampled generators) or "outer" (apolar pairing against
    sampled nonnegative forms).  "ball" is a calibration cone {|g| <= R}.
    """

    cone: str
    n: int
    mode: Optional[str] = None
    oracle_tol: float = 1e-9
    seed: int = 0
    generator_count: int = 512
    ball_radius: float = 1.0
    refute_attempts: int = 64
    check_center: bool = True
    # derived fields
    dim: int = field(init=False)
    star_center: np.ndarray = field(init=False)

    def __post_init__(self):
        if self.cone not in SECTION_CONES:
            raise ValueError(f"unknown cone {self.cone!r}")
        if self.n < 3 and self.cone != "ball":
            raise ValueError("n must be >= 3")
        if self.cone in ("nn", "psd", "dnn", "spn", "ball"):
            if self.mode not in (None, "exact"):
                raise ValueError(f"cone {self.cone} is decided exactly; mode must be None")
            self.mode = "exact"
        elif self.cone in ("cop", "cp"):
            if self.mode is None:
                self.mode = "exact" if self.n <= 4 else None
            if self.mode == "exact" and self.n > 4:
                raise ValueError(f"{self.cone} is only exactly decidable for n <= 4; "
                                 "request mode 'inner' or 'outer'")
            if self.mode not in ("exact", "inner", "outer"):
                raise ValueError(f"{self.cone} at n = {self.n} needs mode 'inner' or 'outer'")
        elif self.cone == "lf":
            if self.mode not in ("inner", "outer"):
                raise ValueError("lf needs mode 'inner' or 'outer'")
        self.dim = dim_M(self.n)
        basis = basis_M(self.n)
        self._bstack = np.array([b.to_numpy() for b in basis])
        keys, gam = _l2_gram_float(self.n)
        self._keys = keys
        self._gam = gam
        self._bcoef = np.array([coeff_vector(b, self.n) for b in self._bstack])
        if self.cone == "ball":
            self.star_center = np.zeros(self.dim)
        elif self.cone == "lf":
            gens = lf_generators(self.n, self.generator_count, self.seed)
            self._gens = gens
            navg = self.n * (self.n + 2) / 3.0  # generators have average 3/(n(n+2))
            pts = gens * navg
            self._gen_cols = np.array([self._tvec(g) for g in pts]).T
            center_mat = pts.mean(axis=0)
            self.star_center = self.coords_of(center_mat)
            self._pos = _pos_samples(self.n, max(64, self.generator_count // 4),
                                     self.seed + 1)
        else:
            self.star_center = self.coords_of(_center_matrix(self.n))
        self._center_mat = self.matrix_of(self.star_center)
        if self.check_center and not self.membership(self.star_center):
            raise ValueError("star center failed the membership oracle")

    # -- coordinate maps ----------------------------------------------------
    def _tvec(self, a: np.ndarray) -> np.ndarray:
        return np.array([a[i, j] * (1.0 if i == j else 2.0) for (i, j) in self._keys])

    def coords_of(self, a: np.ndarray) -> np.ndarray:
        """Coordinates in the orthonormal basis of M of q_A - r^2."""
        diff = self._tvec(a - np.ones((self.n, self.n)))
        return self._bcoef @ (self._gam @ diff)

    def matrix_of(self, g: np.ndarray) -> np.ndarray:
        return np.ones((self.n, self.n)) + np.tensordot(g, self._bstack, axes=1)

    # -- the membership oracle ------------------------------------------------
    def membership(self, g: np.ndarray) -> bool:
        """Is r^2 + sum g_i b_i in the (translated) cone section?"""
        g = np.asarray(g, dtype=float)
        tol = self.oracle_tol
        if self.cone == "ball":
            return float(np.linalg.norm(g)) <= self.ball_radius + tol
        a = self.matrix_of(g)
        scale = 1.0 + np.abs(a).max()
        if self.cone == "nn":
            return float(a.min()) >= -tol * scale
        if self.cone == "psd":
            return float(np.linalg.eigvalsh(a)[0]) >= -tol * scale
        if self.cone == "dnn" or (self.cone == "cp" and self.mode == "exact"):
            return (float(a.min()) >= -tol * scale
                    and float(np.linalg.eigvalsh(a)[0]) >= -tol * scale)
        if self.cone == "spn" or (self.cone == "cop" and self.mode == "exact"):
            # a boundary query can leave the solver indeterminate; counting
            # that as non-membership keeps bisection within solver resolution
            try:
                res = spn_decompose(SymMatrix(a), tol=max(tol, 1e-8))
            except RuntimeError:
                return False
            return isinstance(res, SpnPair)
        if self.cone == "cop":
            if self.mode == "inner":
                for r in (0, 1):
                    try:
                        out = parrilo_member(SymMatrix(a), r, tol=max(tol, 1e-7))
                    except RuntimeError:
                        continue
                    if isinstance(out, SosGram):
                        return True
                return False
            return cop_refute(SymMatrix(a), attempts=self.refute_attempts,
                              seed=self.seed, tol=max(tol, 1e-9)) is None
        if self.cone == "cp":
            if self.mode == "inner":
                if float(a.min()) < -tol * scale:
                    return False
                diag = np.diag(a)
                off = np.abs(a).sum(axis=1) - np.abs(diag)
                return bool(np.all(diag >= off - tol * scale))
            if float(a.min()) < -tol * scale or np.linalg.eigvalsh(a)[0] < -tol * scale:
                return False
            try:
                sep = cp_refute(SymMatrix(a), r=1, tol=max(tol, 1e-8))
            except RuntimeError:
                return True  # not refuted: stay on the outer side
            return sep is None
        # lf
        if self.mode == "inner":
            target = self._tvec(a)
            res = linprog(np.zeros(self._gen_cols.shape[1]),
                          A_eq=self._gen_cols, b_eq=target,
                          bounds=(0, None), method="highs")
            return bool(res.status == 0)
        for p in self._pos:
            if _diff_pairing(a, p) < -max(tol, 1e-10) * (1.0 + np.abs(p).max()) * np.abs(a).max():
                return False
        return True


def section_membership(spec: SectionSpec, g) -> bool:
    return spec.membership(np.asarray(g, dtype=float))


# ---------------------------------------------------------------------------
# radial function
# ---------------------------------------------------------------------------

class RadialError(RuntimeError):
    pass


def _radial_nn(spec: SectionSpec, d_mat: np.ndarray) -> float:
    neg = d_mat < 0
    if not neg.any():
        raise RadialError("direction never exits the section")
    return float((-spec._center_mat[neg] / d_mat[neg]).min())


def _radial_psd(spec: SectionSpec, d_mat: np.ndarray) -> float:
    if not hasattr(spec, "_chol"):
        spec._chol = np.linalg.cholesky(spec._center_mat)
    L = spec._chol
    w = np.linalg.solve(L, np.linalg.solve(L, d_mat).T)
    lam = np.linalg.eigvalsh(0.5 * (w + w.T))[0]
    if lam >= 0:
        raise RadialError("direction never exits the section")
    return -1.0 / float(lam)


def _radial_spn(spec: SectionSpec, d_mat: np.ndarray) -> float:
    from .sdp import LinExpr, SdpProblem, SdpStatus, sdp_solve
    n = spec.n
    pairs = [(i, j) for i in range(n) for j in range(i, n)]
    prob = SdpProblem(psd_block_dims=[n], nonneg_dim=len(pairs), free_dim=1)
    for k, (i, j) in enumerate(pairs):
        expr = (LinExpr().add_psd_entry(0, i, j, 1.0).add_nonneg(k, 1.0)
                .add_free(0, -float(d_mat[i, j])))
        prob.constraints.append((expr, float(spec._center_mat[i, j])))
    prob.objective = LinExpr().add_free(0, -1.0)
    sol = sdp_solve(prob, tol=1e-8, max_iter=200)
    if sol.status != SdpStatus.OPTIMAL:
        raise RadialError(f"parametric SPN radial failed: {sol.message}")
    return float(sol.free[0])


def radial(spec: SectionSpec, direction, bisect_tol: float = 1e-9,
           method: str = "auto") -> float:
    """Largest t with center + t * direction inside the section.

    Exact closed forms cover nn (entry ratios) and psd (a generalized
    eigenvalue); dnn is their minimum; spn solves one parametric SDP.  All
    other oracles use bracket doubling plus bisection, the generic reference
    path (also available for every cone via method="bisect").
    """
    g = np.asarray(direction, dtype=float)
    nrm = float(np.linalg.norm(g))
    if abs(nrm - 1.0) > 1e-12:
        raise ValueError("direction must be normalized")
    if method == "auto":
        d_mat = np.tensordot(g, spec._bstack, axes=1)
        if spec.cone == "nn":
            return _radial_nn(spec, d_mat)
        if spec.cone == "psd":
            return _radial_psd(spec, d_mat)
        if spec.cone == "dnn" or (spec.cone == "cp" and spec.mode == "exact"):
            return min(_radial_nn(spec, d_mat), _radial_psd(spec, d_mat))
        if spec.cone == "spn" or (spec.cone == "cop" and spec.mode == "exact"):
            return _radial_spn(spec, d_mat)
    # generic bracket + bisection on the membership oracle (convex section)
    c = spec.star_center
    hi = 1.0
    lo = 0.0
    while spec.membership(c + hi * g):
        lo = hi
        hi *= 2.0
        if hi > 1e6:
            raise RadialError("no bracket found within 1e6")
    while hi - lo > bisect_tol * hi:
        mid = 0.5 * (lo + hi)
        if spec.membership(c + mid * g):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# Monte Carlo volume radius
# ---------------------------------------------------------------------------

def _thread_count() -> int:
    try:
        return max(1, int(os.environ.get("COPOSLAB_THREADS", "1")))
    except ValueError:
        return 1


def vrad_mc(spec: SectionSpec, samples: int, seed: int,
            bisect_tol: float = 1e-6, bootstrap: int = 200) -> VradEstimate:
    """Monte Carlo volume radius (Vol/Vol(B_d))^(1/d) with bootstrap CI.

    Uses Vol = Vol(B_d) E[r(theta)^d] about the star center (volume is
    translation invariant); deterministic given (seed, samples) regardless
    of the COPOSLAB_THREADS parallelism degree.
    """
    if samples < 100:
        raise ValueError("samples must be >= 100")
    d = spec.dim
    rng = np.random.RandomState(seed)
    dirs = rng.standard_normal((samples, d))
    dirs /= np.linalg.norm(dirs, axis=1)[:, None]

    nthreads = _thread_count()
    if nthreads > 1 and spec.cone not in ("nn", "psd", "dnn"):
        chunks = np.array_split(np.arange(samples), nthreads * 4)

        def work(idx):
            return [radial(spec, dirs[i], bisect_tol) for i in idx]

        radii = np.empty(samples)
        with ThreadPoolExecutor(max_workers=nthreads) as ex:
            for idx, vals in zip(chunks, ex.map(work, chunks)):
                radii[idx] = vals
    else:
        radii = np.array([radial(spec, dirs[i], bisect_tol) for i in range(samples)])

    powers = radii ** d
    est = float(powers.mean() ** (1.0 / d))
    brng = np.random.RandomState(seed + 101)
    stats = []
    for _ in range(bootstrap):
        idx = brng.randint(0, samples, size=samples)
        stats.append(float(powers[idx].mean() ** (1.0 / d)))
    lo, hi = np.percentile(stats, [2.5, 97.5])
    lo = min(lo, est)
    hi = max(hi, est)
    return VradEstimate(cone=spec.cone, n=spec.n, mode=spec.mode,
                        point_estimate=est, ci_low=float(lo), ci_high=float(hi),
                        samples=samples, seed=seed, dim=d)


# ---------------------------------------------------------------------------
# exact volume of the NN section (a simplex)
# ---------------------------------------------------------------------------

def _nn_vertices(n: int) -> List[EvenQuartic]:
    """Extreme points of the NN section before translation: scaled monomials."""
    out = []
    c1 = Fraction(n * (n + 2), 3)
    for i in range(n):
        rows = [[Fraction(0)] * n for _ in range(n)]
        rows[i][i] = c1
        out.append(EvenQuartic(tuple(map(tuple, rows))))
    c2 = Fraction(n * (n + 2), 2)
    for i in range(n):
        for j in range(i + 1, n):
            rows = [[Fraction(0)] * n for _ in range(n)]
            rows[i][j] = rows[j][i] = c2
            out.append(EvenQuartic(tuple(map(tuple, rows))))
    return out


def _fraction_det(m: List[List[Fraction]]) -> Fraction:
    """Exact determinant by fraction-free-ish Gaussian elimination."""
    a = [row[:] for row in m]
    d = len(a)
    det = Fraction(1)
    for k in range(d):
        piv = None
        for r in range(k, d):
            if a[r][k] != 0:
                piv = r
                break
        if piv is None:
            return Fraction(0)
        if piv != k:
            a[k], a[piv] = a[piv], a[k]
            det = -det
        det *= a[k][k]
        inv = 1 / a[k][k]
        for r in range(k + 1, d):
            f = a[r][k] * inv
            if f == 0:
                continue
            for cidx in range(k, d):
                a[r][cidx] -= f * a[k][cidx]
    return det


def vrad_nn_exact(n: int) -> float:
    """Exact volume radius of the NN section, a simplex on n(n+1)/2 vertices.

    The volume comes from the rational Gram determinant of the vertex
    differences in the L2 inner product: Vol = sqrt(det G) / d!, which
    equals the coordinate determinant formula in any orthonormal basis of M.
    """
    if not 3 <= n <= 10:
        raise ValueError("supported for 3 <= n <= 10")
    verts = _nn_vertices(n)
    d = dim_M(n)
    assert len(verts) == d + 1
    diffs = [verts[k] - verts[0] for k in range(1, d + 1)]
    gram = [[l2_inner(diffs[i], diffs[j]) for j in range(d)] for i in range(d)]
    det = _fraction_det(gram)
    vol = math.sqrt(float(det)) / math.factorial(d)
    ball = math.pi ** (d / 2.0) / math.gamma(d / 2.0 + 1.0)
    return (vol / ball) ** (1.0 / d)


# ---------------------------------------------------------------------------
# bound checks
# ---------------------------------------------------------------------------

ORDER_PAIRS = [("cp", "dnn"), ("dnn", "psd"), ("dnn", "nn"),
               ("psd", "spn"), ("nn", "spn"), ("spn", "cop")]


@dataclass
class BoundsReport:
    n: int
    band: Tuple[float, float]
    items: List[dict]

    @property
    def all_passed(self) -> bool:
        return all(item["passed"] for item in self.items)

    def to_json_dict(self) -> dict:
        return {"n": self.n, "band": list(self.band), "all_passed": self.all_passed,
                "checks": self.items}


def check_bounds(n: int, estimates: Dict[str, VradEstimate]) -> BoundsReport:
    """Check estimates against the universal band and the inclusion order.

    (a) every 95% CI intersects [(2^4 sqrt2)^-1 / n, 2^8 sqrt2 / n];
    (b) inner-cone estimates do not exceed outer-cone ones beyond CI overlap;
    (c) the exact NN volume radius is at least (sqrt2 n)^-1.
    """
    lo = 1.0 / (16.0 * math.sqrt(2.0) * n)
    hi = 256.0 * math.sqrt(2.0) / n
    items: List[dict] = []
    for cone, est in sorted(estimates.items()):
        ok = est.ci_high >= lo and est.ci_low <= hi
        items.append({"check": "band", "cone": cone, "passed": bool(ok),
                      "ci": [est.ci_low, est.ci_high], "band": [lo, hi]})
    for inner, outer in ORDER_PAIRS:
        if inner in estimates and outer in estimates:
            ei, eo = estimates[inner], estimates[outer]
            ok = (ei.point_estimate <= eo.point_estimate) or (ei.ci_low <= eo.ci_high)
            items.append({"check": "order", "pair": [inner, outer], "passed": bool(ok),
                          "estimates": [ei.point_estimate, eo.point_estimate]})
    if estimates:
        exact = vrad_nn_exact(n)
        ok = exact >= 1.0 / (math.sqrt(2.0) * n)
        items.append({"check": "nn-exact-lower", "passed": bool(ok),
                      "vrad_nn_exact": exact,
                      "lower": 1.0 / (math.sqrt(2.0) * n)})
    return BoundsReport(n=n, band=(lo, hi), items=items)
