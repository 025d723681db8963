"""Discretized transfer operators and their Ruelle-Perron-Frobenius data.

Operators act on functions that are piecewise constant on depth-k cylinders,
one collocation point (the cylinder representative) per cylinder.  An entry
couples cylinder alpha to cylinder beta exactly when beta's word shifts onto
alpha's truncation, and its weight is built from the one-step cocycle
(tau, theta) at beta's representative:

    raw mode         exp((-s + ib) tau) * exp(-i k theta)
    normalized mode  exp(f_a + ib tau) * exp(-i k theta)

with f_a = -(delta + a) tau + log h0 - log(h0 o shift) - log lambda_a, so the
untwisted normalized operator at a = 0 fixes constants and its dual fixes the
equilibrium weights nu_U = h0 nu0.  Pressure is the log of the leading
eigenvalue of the raw operator and the critical exponent is its root in s.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .coding import CapacityExceeded, CylinderTower, CYLINDER_CAPACITY, SchottkyScheme

RPF_TOL = 1e-13
RPF_RESIDUAL_TARGET = 1e-11
RPF_MAX_ITER = 10**5
DIMENSION_TOL = 1e-12
DIMENSION_BRACKET = (0.0, 2.0)


class NoConvergence(RuntimeError):
    """Power iteration ran out of budget; carries the last residuals."""

    def __init__(self, message, residual_right=math.nan, residual_left=math.nan):
        super().__init__(message)
        self.residual_right = residual_right
        self.residual_left = residual_left


class BracketFailure(ValueError):
    """Pressure does not change sign over the root-finding bracket."""


@dataclass(frozen=True)
class TwistParams:
    """Exponent offset a, frequency b and SO(2) character index k_rep.

    (b, k_rep) = (0, 0) is the untwisted operator; k_rep = 0 keeps the
    trivial character.
    """

    a: float = 0.0
    b: float = 0.0
    k_rep: int = 0

    def __post_init__(self):
        if not (math.isfinite(self.a) and math.isfinite(self.b)):
            raise ValueError("twist parameters must be finite")

    @property
    def untwisted(self) -> bool:
        return self.b == 0.0 and self.k_rep == 0


def as_tower(obj, depth: int, capacity: int = CYLINDER_CAPACITY) -> CylinderTower:
    if isinstance(obj, CylinderTower):
        if depth > obj.depth:
            raise ValueError(f"tower only holds depths up to {obj.depth}")
        return obj
    if isinstance(obj, SchottkyScheme):
        return obj.tower(depth, capacity)
    raise TypeError(f"expected a SchottkyScheme or CylinderTower, got {type(obj)!r}")


class TransferMatrix:
    """One depth-k transfer operator as a structured sparse product.

    Rows and columns are indexed by depth-k cylinders in lexicographic word
    order.  Entry (alpha, beta) is nonzero iff beta's word shifted by one
    equals alpha's word truncated by one; every nonzero entry in a column
    carries the same weight, evaluated at the source cylinder representative,
    times an optional diagonal row scale (the h0 conjugation of the
    normalized mode).  Twisting multiplies column weights by a unimodular
    phase, so twisted entries keep the moduli of the untwisted ones.
    """

    def __init__(self, tower: CylinderTower, depth: int, mode: str,
                 params: TwistParams, col_weight: np.ndarray,
                 row_scale: np.ndarray | None):
        self.tower = tower
        self.depth = depth
        self.mode = mode
        self.params = params
        self.col_weight = col_weight
        self.row_scale = row_scale
        self._level = tower.level(depth)
        self._idx = tower.transfer_indices(depth)
        self._bar = None
        if self._idx is None:
            n = tower.n_symbols
            self._bar = (np.arange(n) + tower.rank) % n

    @property
    def n(self) -> int:
        return self._level.n

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n, self.n)

    @property
    def nnz(self) -> int:
        return self.n * (self.tower.n_symbols - 1)

    def matvec(self, v: np.ndarray) -> np.ndarray:
        wv = self.col_weight * v
        if self._idx is None:
            out = wv.sum() - wv[self._bar]
        else:
            children, _, prefix_idx = self._idx
            out = np.add.reduce(wv[children], axis=1)[prefix_idx]
        if self.row_scale is not None:
            out = out * self.row_scale
        return out

    def rmatvec(self, u: np.ndarray) -> np.ndarray:
        if self.row_scale is not None:
            u = u * self.row_scale
        if self._idx is None:
            return self.col_weight * (u.sum() - u[self._bar])
        _, row_groups, _ = self._idx
        sums = np.add.reduce(u[row_groups], axis=1)
        return self.col_weight * sums[self._level.parent]

    def dense(self, cap: int = 20000) -> np.ndarray:
        """Materialized matrix, for small-depth oracles only."""
        if self.n > cap:
            raise CapacityExceeded(f"dense matrix of size {self.n} exceeds cap {cap}")
        out = np.zeros((self.n, self.n), dtype=complex)
        eye = np.eye(self.n, dtype=complex)
        for j in range(self.n):
            out[:, j] = self.matvec(eye[:, j])
        return out

    def modulus(self) -> "TransferMatrix":
        """Entrywise absolute value: the comparison operator for dominance."""
        return TransferMatrix(self.tower, self.depth, self.mode,
                              TwistParams(self.params.a, 0.0, 0),
                              np.abs(self.col_weight), self.row_scale)


@dataclass
class RPFData:
    """Leading eigenvalue with positive right/left eigendata and residuals."""

    lam: float
    h: np.ndarray
    nu: np.ndarray
    residual_right: float
    residual_left: float
    duality_gap: float
    iterations: int


@dataclass
class NormalizedWeights:
    """Everything needed to weight operators so the a = 0 eigenvalue is one.

    Holds the critical exponent delta, the eigendata (h0, nu0) of the raw
    operator at s = delta, the eigenvalue lambda_a of the raw operator at
    s = delta + a, and the equilibrium cylinder weights nu_U = h0 nu0.
    """

    depth: int
    a: float
    delta: float
    lam: float
    h0: np.ndarray
    nu0: np.ndarray
    nu_U: np.ndarray
    mean_tau: float

    def f_entries(self, matrix: TransferMatrix) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(rows, cols, f) triples of the normalized log-weights, small systems."""
        n = matrix.n
        idx = matrix._idx
        tau = matrix.tower.level(self.depth).tau
        logh = np.log(self.h0)
        if idx is None:
            rows, cols = np.nonzero(np.arange(n)[:, None] != matrix._bar[None, :])
        else:
            children, _, prefix_idx = idx
            cols_per_row = children[prefix_idx]
            rows = np.repeat(np.arange(n), cols_per_row.shape[1])
            cols = cols_per_row.ravel()
        f = (-(self.a + self.delta) * tau[cols] + logh[cols] - logh[rows]
             - math.log(self.lam))
        return rows, cols, f


def nu_norm(v: np.ndarray, nu_U: np.ndarray) -> float:
    """Equilibrium-weighted two-norm."""
    return float(np.sqrt(np.sum(nu_U * np.abs(v) ** 2)))


def assemble(obj, depth: int, mode: str = "raw",
             params: TwistParams = TwistParams(),
             weights: NormalizedWeights | None = None,
             capacity: int = CYLINDER_CAPACITY,
             regauge: np.ndarray | None = None) -> TransferMatrix:
    """Build the depth-k transfer operator for a scheme, tower or mock.

    mode "raw" uses column weight exp((-a + ib) tau - i k theta) with the
    exponent parameter a playing the role of s; mode "normalized" replaces
    -s tau by the f_a combination and needs NormalizedWeights (computed on
    demand when omitted).  regauge adds the coboundary phi(shift) - phi to
    theta, phi given per depth-(k-1) cylinder; it conjugates the twisted
    operator by a unimodular diagonal and is exposed for invariance tests.
    """
    tower = as_tower(obj, depth, capacity)
    lv = tower.level(depth)
    theta = lv.theta
    if regauge is not None:
        if depth < 2:
            raise ValueError("regauge needs depth >= 2")
        phi = np.asarray(regauge, dtype=float)
        if phi.size != tower.level(depth - 1).n:
            raise ValueError("regauge vector must match the depth-(k-1) count")
        _, _, prefix_idx = tower.transfer_indices(depth)
        theta = theta + phi[lv.parent] - phi[prefix_idx]
    phase = np.exp(1j * (params.b * lv.tau - params.k_rep * theta)) \
        if (params.b != 0.0 or params.k_rep != 0) else None
    if mode == "raw":
        colw = np.exp(-params.a * lv.tau)
        row_scale = None
    elif mode == "normalized":
        if weights is None:
            weights = normalize(obj, depth, a=params.a, capacity=capacity)
        if weights.depth != depth:
            raise ValueError("weights were computed at a different depth")
        if weights.a != params.a:
            raise ValueError(f"weights carry a={weights.a}, params ask a={params.a}")
        colw = np.exp(-(weights.delta + params.a) * lv.tau) * weights.h0 / weights.lam
        row_scale = 1.0 / weights.h0
    else:
        raise ValueError(f"unknown mode {mode!r}")
    if phase is not None:
        colw = colw * phase
    return TransferMatrix(tower, depth, mode, params, colw, row_scale)


def rpf(matrix: TransferMatrix, tol: float = RPF_TOL,
        max_iter: int = RPF_MAX_ITER,
        residual_target: float = RPF_RESIDUAL_TARGET) -> RPFData:
    """Leading eigendata of an untwisted operator by two-sided power iteration.

    Runs right and left iterations with per-step normalization until the
    relative eigenvalue change drops below tol and the eigen-equation
    residuals drop below residual_target, then normalizes nu to a
    probability vector and h against it (sum nu h = 1).
    """
    if not matrix.params.untwisted:
        raise ValueError("RPF data is defined for the untwisted operator only")
    if np.iscomplexobj(matrix.col_weight) and np.any(matrix.col_weight.imag != 0):
        raise ValueError("RPF needs a nonnegative real matrix")
    h = np.full(matrix.n, 1.0 / matrix.n)
    nu = np.full(matrix.n, 1.0 / matrix.n)
    lam_r = lam_l = math.nan
    res_r = res_l = math.inf
    iterations = 0
    check_every = 10
    while iterations < max_iter:
        iterations += 1
        mh = np.real(matrix.matvec(h))
        mtnu = np.real(matrix.rmatvec(nu))
        new_r = float(mh.sum())
        new_l = float(mtnu.sum())
        done_lam = (math.isfinite(lam_r)
                    and abs(new_r - lam_r) <= tol * abs(new_r)
                    and abs(new_l - lam_l) <= tol * abs(new_l))
        lam_r, lam_l = new_r, new_l
        h = mh / new_r
        nu = mtnu / new_l
        if done_lam and (iterations % check_every == 0 or iterations < check_every):
            res_r = float(np.max(np.abs(np.real(matrix.matvec(h)) - lam_r * h))
                          / np.max(np.abs(h)))
            res_l = float(np.max(np.abs(np.real(matrix.rmatvec(nu)) - lam_l * nu))
                          / np.max(np.abs(nu)))
            if res_r <= residual_target and res_l <= residual_target:
                break
    else:
        raise NoConvergence(
            f"power iteration did not converge in {max_iter} steps",
            residual_right=res_r, residual_left=res_l)
    if lam_r <= 0 or np.any(h <= 0) or np.any(nu <= 0):
        raise NoConvergence("power iteration lost positivity",
                            residual_right=res_r, residual_left=res_l)
    nu = nu / nu.sum()
    h = h / float(nu @ h)
    return RPFData(lam=lam_r, h=h, nu=nu, residual_right=res_r, residual_left=res_l,
                   duality_gap=abs(lam_r - lam_l) / lam_r, iterations=iterations)


class PressureCurve:
    """Warm-started pressure evaluations at a fixed depth."""

    def __init__(self, obj, depth: int, capacity: int = CYLINDER_CAPACITY,
                 tol: float = RPF_TOL):
        self.tower = as_tower(obj, depth, capacity)
        self.depth = depth
        self.tol = tol
        self._h = None
        self._nu = None
        self.last_rpf: RPFData | None = None

    def pressure(self, s: float) -> float:
        matrix = assemble(self.tower, self.depth, "raw", TwistParams(a=s))
        h = self._h if self._h is not None else np.full(matrix.n, 1.0 / matrix.n)
        nu = self._nu if self._nu is not None else np.full(matrix.n, 1.0 / matrix.n)
        lam_r = lam_l = math.nan
        res_ok = False
        for it in range(RPF_MAX_ITER):
            mh = np.real(matrix.matvec(h))
            mtnu = np.real(matrix.rmatvec(nu))
            new_r, new_l = float(mh.sum()), float(mtnu.sum())
            done = (math.isfinite(lam_r)
                    and abs(new_r - lam_r) <= self.tol * abs(new_r)
                    and abs(new_l - lam_l) <= self.tol * abs(new_l))
            lam_r, lam_l = new_r, new_l
            h = mh / new_r
            nu = mtnu / new_l
            if done:
                res_r = float(np.max(np.abs(np.real(matrix.matvec(h)) - lam_r * h))
                              / np.max(np.abs(h)))
                res_l = float(np.max(np.abs(np.real(matrix.rmatvec(nu)) - lam_l * nu))
                              / np.max(np.abs(nu)))
                if res_r <= RPF_RESIDUAL_TARGET and res_l <= RPF_RESIDUAL_TARGET:
                    res_ok = True
                    break
        if not res_ok:
            raise NoConvergence("pressure evaluation did not converge")
        self._h, self._nu = h, nu
        self.last_rpf = RPFData(lam=lam_r, h=h / float((nu / nu.sum()) @ h),
                                nu=nu / nu.sum(), residual_right=res_r,
                                residual_left=res_l,
                                duality_gap=abs(lam_r - lam_l) / lam_r,
                                iterations=it + 1)
        return math.log(lam_r)


def pressure(obj, depth: int, s: float, capacity: int = CYLINDER_CAPACITY) -> float:
    """log of the leading raw-operator eigenvalue at exponent s."""
    return PressureCurve(obj, depth, capacity).pressure(s)


def dimension(obj, depth: int, tol: float = DIMENSION_TOL,
              bracket: tuple[float, float] = DIMENSION_BRACKET,
              capacity: int = CYLINDER_CAPACITY) -> float:
    """Critical exponent: the root of the pressure in s.

    Bisection down to a short interval, then secant polish to |P(s)| < tol.
    """
    curve = PressureCurve(obj, depth, capacity)
    lo, hi = bracket
    p_lo, p_hi = curve.pressure(lo), curve.pressure(hi)
    if not (p_lo > 0.0 > p_hi):
        raise BracketFailure(
            f"pressure does not straddle zero on [{lo}, {hi}]: P({lo}) = {p_lo:.3e}, "
            f"P({hi}) = {p_hi:.3e}")
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        p_mid = curve.pressure(mid)
        if abs(p_mid) < tol:
            return mid
        if p_mid > 0:
            lo, p_lo = mid, p_mid
        else:
            hi, p_hi = mid, p_mid
        if hi - lo < 1e-4:
            break
    s0, s1, p0, p1 = lo, hi, p_lo, p_hi
    for _ in range(60):
        s2 = s1 - p1 * (s1 - s0) / (p1 - p0)
        if not lo - 1e-3 <= s2 <= hi + 1e-3:
            s2 = 0.5 * (lo + hi)
        p2 = curve.pressure(s2)
        if abs(p2) < tol:
            return s2
        s0, p0, s1, p1 = s1, p1, s2, p2
    raise NoConvergence(f"dimension polish stalled, |P| = {abs(p1):.3e}")


def normalize(obj, depth: int, a: float = 0.0, delta: float | None = None,
              capacity: int = CYLINDER_CAPACITY,
              dimension_tol: float = DIMENSION_TOL) -> NormalizedWeights:
    """Weights making the untwisted normalized operator have eigenvalue one.

    Computes the critical exponent when not supplied, the eigendata of the
    raw operator at that exponent, and the eigenvalue lambda_a at offset a.
    """
    tower = as_tower(obj, depth, capacity)
    if delta is None:
        delta = dimension(tower, depth, tol=dimension_tol)
    base = rpf(assemble(tower, depth, "raw", TwistParams(a=delta)))
    if a == 0.0:
        lam = base.lam
    else:
        lam = math.exp(PressureCurve(tower, depth).pressure(delta + a))
    nu_U = base.h * base.nu
    nu_U = nu_U / nu_U.sum()
    mean_tau = float(nu_U @ tower.level(depth).tau)
    return NormalizedWeights(depth=depth, a=a, delta=delta, lam=lam,
                             h0=base.h, nu0=base.nu, nu_U=nu_U, mean_tau=mean_tau)


def iterate_decay(obj, depth: int, params: TwistParams, H0: np.ndarray, n: int,
                  weights: NormalizedWeights | None = None,
                  capacity: int = CYLINDER_CAPACITY,
                  regauge: np.ndarray | None = None) -> np.ndarray:
    """Equilibrium-weighted two-norms of the first n normalized iterates.

    Entry j holds the norm of the j-th iterate of H0 (entry 0 is H0 itself).
    Iterates are renormalized internally so long decays do not underflow.
    """
    if weights is None:
        weights = normalize(obj, depth, a=params.a, capacity=capacity)
    matrix = assemble(obj, depth, "normalized", params, weights=weights,
                      capacity=capacity, regauge=regauge)
    v = np.asarray(H0, dtype=complex)
    if v.shape != (matrix.n,):
        raise ValueError(f"H0 must have shape ({matrix.n},)")
    base = nu_norm(v, weights.nu_U)
    if base == 0:
        raise ValueError("H0 must be nonzero")
    log_norms = np.empty(n + 1)
    log_norms[0] = math.log(base)
    v = v / base
    carried = log_norms[0]
    for j in range(1, n + 1):
        v = matrix.matvec(v)
        step = nu_norm(v, weights.nu_U)
        if step == 0:
            log_norms[j:] = -math.inf
            break
        carried += math.log(step)
        log_norms[j] = carried
        v = v / step
    return np.exp(log_norms)
