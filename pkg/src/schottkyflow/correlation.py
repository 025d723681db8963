"""Correlation functions of the holonomy suspension flow.

States are (cylinder, rotor angle, time) triples glued by the shift: when
the clock passes the return time the point shifts, and the rotor turns by
the holonomy angle.  Observables are finite character sums in the rotor
factor, locally constant across cylinders, with a shared smooth time
profile, so rotor integrals are exact and the class is closed under the
transfer operators.

Two independent routes to the same quantity live here.  upsilon() computes
the correlation by direct quadrature: equilibrium cylinder weights, exact
character pairing with the accumulated holonomy phase, and exact unfolding
of the suspension along each orbit.  laplace_series() evaluates the Laplace
transform through iterates of the normalized twisted operators.  Agreement
between the transformed time series and the operator series is the central
consistency check of the module.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expi

from .coding import (
    CapacityExceeded,
    CYLINDER_CAPACITY,
    GEODESIC_CLASS_CAPACITY,
    SchottkyScheme,
    closed_geodesics,
    cylinder_count,
)
from .transfer import NormalizedWeights, TwistParams, assemble, normalize

CHUNK = 1 << 18


class HorizonExceeded(RuntimeError):
    """Requested times outrun the symbolic unfolding depth."""


class Divergence(RuntimeError):
    """Operator series grows: the real part of xi is too small."""


class InsufficientDecayWindow(ValueError):
    """Too few usable points beyond the roof to fit a decay rate."""


def bump_profile(x):
    """Smooth bump on (0, 1), flat zero outside, peak value one."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    inside = (x > 0) & (x < 1)
    xs = x[inside]
    out[inside] = np.exp(4.0 - 1.0 / (xs * (1.0 - xs)))
    return out


def flat_profile(x):
    x = np.asarray(x, dtype=float)
    return np.where((x >= 0) & (x < 1), 1.0, 0.0)


PROFILES = {"bump": bump_profile, "flat": flat_profile}


@dataclass(frozen=True)
class Observable:
    """Character sum in the rotor angle with a cylinder-constant base part.

    coeffs maps the character index k to its coefficient; the conjugate
    symmetry c_{-k} = conj(c_k) keeps the observable real-valued and is
    filled in automatically.  base holds one value per depth base_depth
    cylinder in lexicographic order (omit for the constant 1).  The time
    profile lives on [0, 1) and is rescaled to [0, tau) on each cylinder.
    """

    coeffs: dict[int, complex]
    base_depth: int = 0
    base: np.ndarray | None = None
    profile: str = "bump"

    def __post_init__(self):
        full = {}
        for k, c in self.coeffs.items():
            k = int(k)
            c = complex(c)
            if k in full and abs(full[k] - c) > 1e-14:
                raise ValueError(f"conflicting coefficients for character {k}")
            full[k] = c
            full.setdefault(-k, c.conjugate())
            if abs(full[-k] - c.conjugate()) > 1e-14:
                raise ValueError("coefficients break the real-valuedness symmetry")
        if 0 in full and abs(full[0].imag) > 1e-14:
            raise ValueError("the constant character needs a real coefficient")
        object.__setattr__(self, "coeffs", full)
        if self.base is not None:
            arr = np.asarray(self.base, dtype=float)
            if self.base_depth < 1:
                raise ValueError("a base table needs base_depth >= 1")
            object.__setattr__(self, "base", arr)
        if callable(self.profile):
            return
        if self.profile not in PROFILES:
            raise ValueError(f"unknown profile {self.profile!r}")

    @property
    def profile_fn(self):
        return self.profile if callable(self.profile) else PROFILES[self.profile]

    def character_support(self) -> list[int]:
        return sorted(k for k, c in self.coeffs.items() if c != 0)

    def base_at(self, tower, enc: np.ndarray, at_depth: int) -> np.ndarray:
        """Base values for words given by their codes at a known depth."""
        if self.base is None:
            return np.ones(enc.shape)
        expect = cylinder_count(tower.rank, self.base_depth)
        if self.base.size != expect:
            raise ValueError(
                f"base table has {self.base.size} entries, depth "
                f"{self.base_depth} needs {expect}")
        if at_depth < self.base_depth:
            raise ValueError("words shorter than the observable's base depth")
        idx = tower.prefix_index(enc, at_depth, self.base_depth)
        return self.base[idx]


def _gauss01(nodes: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(nodes)
    return (x + 1.0) / 2.0, w / 2.0


def hat_phi(obs: Observable, xi: complex, k_rep: int, tower, depth: int,
            nodes: int = 32) -> np.ndarray:
    """Per-cylinder transform: base * c_k * integral of profile * exp(-xi t).

    The integral runs over [0, tau) at each cylinder representative with a
    fixed Gauss-Legendre rule rescaled to the cylinder's return time.
    """
    lv = tower.level(depth)
    c = obs.coeffs.get(int(k_rep), 0.0)
    if c == 0.0:
        return np.zeros(lv.n, dtype=complex)
    x, w = _gauss01(nodes)
    p = obs.profile_fn(x)
    tau = lv.tau
    kernel = np.exp(-complex(xi) * tau[:, None] * x[None, :])
    integral = tau * (kernel @ (w * p))
    return obs.base_at(tower, lv.enc, depth) * c * integral


@dataclass
class CorrelationSeries:
    """Correlation values on a time grid with their overlap split.

    upsilon0 collects the part of the inner integral that has wrapped at
    least once; upsilon1 the not-yet-wrapped part, which vanishes for times
    beyond the largest return time.  The three arrays satisfy
    upsilon = upsilon0 + upsilon1 exactly as computed.
    """

    t: np.ndarray
    upsilon: np.ndarray
    upsilon0: np.ndarray
    upsilon1: np.ndarray
    max_tau: float
    depth: int


def _auto_depth(scheme: SchottkyScheme, t_max: float, base_need: int,
                capacity: int) -> int:
    probe = scheme.tower(3).level(3)
    tau_min, tau_max = float(probe.tau.min()), float(probe.tau.max())
    levels = math.ceil((t_max + 1.05 * tau_max) / tau_min) + 1
    depth = max(levels + base_need, 2)
    if cylinder_count(scheme.rank, depth) > capacity:
        raise CapacityExceeded(
            f"horizon {t_max} needs depth {depth} "
            f"({cylinder_count(scheme.rank, depth)} cylinders > {capacity})")
    return depth


def upsilon(scheme: SchottkyScheme, phi: Observable, psi: Observable,
            t_values, depth: int | None = None,
            weights: NormalizedWeights | None = None, nodes: int = 32,
            capacity: int = CYLINDER_CAPACITY) -> CorrelationSeries:
    """Correlation of two observables by direct quadrature.

    Equilibrium weights discretize the base measure, the rotor integral is
    the exact character pairing carrying the accumulated holonomy phase,
    and the flow is unfolded exactly: each quadrature point lands in the
    cylinder reached after as many shifts as its elapsed time requires.
    The word depth grows automatically with the horizon (up to capacity)
    unless fixed by hand, in which case overlong times raise.
    """
    t_values = np.atleast_1d(np.asarray(t_values, dtype=float))
    if np.any(t_values < 0):
        raise ValueError("correlation times must be nonnegative")
    t_max = float(t_values.max())
    base_need = max(phi.base_depth, 1)
    if depth is None:
        depth = _auto_depth(scheme, t_max, base_need, capacity)
    depth = max(depth, psi.base_depth, base_need + 1)
    if weights is None or weights.depth != depth:
        delta = weights.delta if weights is not None else None
        weights = normalize(scheme, depth, delta=delta, capacity=capacity)
    tower = scheme.tower(depth, capacity)
    lv = tower.level(depth)
    n_levels = depth - base_need + 1  # usable shift levels 0 .. n_levels-1
    order = np.argsort(t_values, kind="stable")

    x, wq = _gauss01(nodes)
    p_psi = psi.profile_fn(x)
    profile_phi = phi.profile_fn
    ks = sorted(set(phi.character_support()) & set(psi.character_support()))
    pair_coeff = {k: phi.coeffs[k] * np.conj(psi.coeffs[k]) for k in ks}

    total = np.zeros(t_values.size)
    unwrapped = np.zeros(t_values.size)
    max_tau = float(lv.tau.max())
    for start in range(0, lv.n, CHUNK):
        sl = slice(start, min(start + CHUNK, lv.n))
        idx = tower.suffix_indices(depth, n_levels)[sl]
        m = idx.shape[0]
        tau_orbit = np.empty((m, n_levels))
        theta_sum = np.zeros((m, n_levels))
        payload = np.empty((m, n_levels))
        for j in range(n_levels):
            level_j = tower.level(depth - j)
            tau_orbit[:, j] = level_j.tau[idx[:, j]]
            if j + 1 < n_levels:
                theta_sum[:, j + 1] = theta_sum[:, j] + level_j.theta[idx[:, j]]
            payload[:, j] = phi.base_at(tower, level_j.enc[idx[:, j]], depth - j)
        pairing = np.zeros((m, n_levels))
        for k in ks:
            pairing += np.real(pair_coeff[k] * np.exp(-1j * k * theta_sum))
        payload *= pairing
        # return-time partial sums, padded so level advances saturate
        T = np.full((m, n_levels + 2), np.inf)
        T[:, 0] = 0.0
        np.cumsum(tau_orbit, axis=1, out=T[:, 1:n_levels + 1])
        base_psi = psi.base_at(tower, lv.enc[sl], depth)
        tau0 = tau_orbit[:, 0]
        row_weight = weights.nu_U[sl] * tau0 * base_psi
        r = tau0[:, None] * x[None, :]
        n = np.zeros((m, x.size), dtype=np.int64)
        for pos, it in enumerate(order):
            t = t_values[it]
            s = r + t
            if pos == 0:
                for lev in range(1, n_levels + 1):
                    n += T[:, lev, None] <= s
            else:
                # grid times ascend, so each point advances monotonically
                while True:
                    advance = np.take_along_axis(T, n + 1, axis=1) <= s
                    if not advance.any():
                        break
                    n += advance
            if int(n.max()) >= n_levels:
                raise HorizonExceeded(
                    f"time {t} needs more than {n_levels} shift levels at "
                    f"depth {depth}")
            local = s - np.take_along_axis(T, n, axis=1)
            tau_n = np.take_along_axis(tau_orbit, n, axis=1)
            vals = (p_psi[None, :]
                    * profile_phi(local / tau_n)
                    * np.take_along_axis(payload, n, axis=1))
            total[it] += row_weight @ (vals @ wq)
            if t < max_tau:
                vals *= n == 0
                unwrapped[it] += row_weight @ (vals @ wq)
    return CorrelationSeries(t=t_values, upsilon=total,
                             upsilon0=total - unwrapped, upsilon1=unwrapped,
                             max_tau=max_tau, depth=depth)


@dataclass
class LaplaceResult:
    value: complex
    tail_estimate: float
    terms: np.ndarray
    k_terms: int
    characters: tuple[int, ...]


def laplace_series(scheme: SchottkyScheme, phi: Observable, psi: Observable,
                   xi: complex, depth: int = 8,
                   weights: NormalizedWeights | None = None,
                   k_terms: int = 30, nodes: int = 32,
                   capacity: int = CYLINDER_CAPACITY) -> LaplaceResult:
    """Laplace transform of the wrapped correlation via operator iterates.

    Sums lambda_a^n <phi_hat, M^n psi_hat> over iterate orders n and the
    characters shared by both observables, with the transforms taken at xi
    and minus its conjugate.  A geometric tail estimate from the last two
    terms is attached.  Growing partial terms raise Divergence.
    """
    xi = complex(xi)
    if xi.real <= 0:
        raise ValueError("the Laplace transform needs Re(xi) > 0")
    if k_terms < 10:
        raise ValueError("need at least 10 series terms")
    if weights is None:
        weights = normalize(scheme, depth, capacity=capacity)
    if weights.depth != depth or weights.a != 0.0:
        raise ValueError("weights must be the zero-offset data at the same depth")
    tower = scheme.tower(depth, capacity)
    offset = normalize(scheme, depth, a=xi.real, delta=weights.delta,
                       capacity=capacity)
    ks = sorted(set(phi.character_support()) & set(psi.character_support()))
    terms = np.zeros(k_terms + 1, dtype=complex)
    for k in ks:
        # bilinear pairing: the dual collapse then reproduces the unfolded
        # integrand with the accumulated holonomy phase matching the twist
        phat = hat_phi(phi, xi, k, tower, depth, nodes=nodes)
        psat = hat_phi(psi, -np.conj(xi), -k, tower, depth, nodes=nodes)
        matrix = assemble(scheme, depth, "normalized",
                          TwistParams(xi.real, xi.imag, k), weights=offset,
                          capacity=capacity)
        v = psat
        lam_pow = 1.0
        for n in range(1, k_terms + 1):
            v = matrix.matvec(v)
            lam_pow *= offset.lam
            terms[n] += lam_pow * np.sum(weights.nu_U * phat * v)
    mags = np.abs(terms[1:])
    if k_terms >= 6 and np.all(np.diff(mags[-4:]) > 0) and mags[-1] > 10 * mags[0]:
        raise Divergence(
            f"series terms grow ({mags[-1]:.3e} after {k_terms} steps); "
            f"Re(xi) = {xi.real} is too small for this truncation")
    if mags[-2] > 0 and mags[-1] > 0:
        q = mags[-1] / mags[-2]
        tail = mags[-1] * q / (1.0 - q) if q < 1 else math.inf
    else:
        tail = 0.0
    return LaplaceResult(value=complex(terms.sum()), tail_estimate=float(tail),
                         terms=terms, k_terms=k_terms, characters=tuple(ks))


def laplace_of_series(series: CorrelationSeries, xi: complex,
                      component: str = "upsilon0") -> complex:
    """Trapezoid Laplace transform of a sampled correlation series.

    The operator series represents the wrapped component, so the default
    transforms upsilon0; the full correlation and its unwrapped remainder
    (supported below the roof) are available by name.
    """
    values = getattr(series, component)
    kernel = values * np.exp(-complex(xi) * series.t)
    return complex(np.trapezoid(kernel, series.t))


@dataclass
class DecayFit:
    eta: float
    amplitude: float
    fit_residual: float
    window: tuple[float, float]
    n_points: int


def fit_decay(series: CorrelationSeries, floor: float = 1e-13,
              min_points: int = 10, use_peaks: bool = False) -> DecayFit:
    """Least-squares decay rate of log |upsilon| beyond the roof.

    Only times past the largest return time qualify, and values below the
    floor are discarded.  With use_peaks the fit runs through the local
    maxima of |upsilon| only, which tracks the envelope of oscillatory
    decay.
    """
    mask = (series.t > series.max_tau) & (np.abs(series.upsilon) > floor)
    t = series.t[mask]
    y = np.abs(series.upsilon[mask])
    if use_peaks and t.size >= 3:
        inner = (y[1:-1] >= y[:-2]) & (y[1:-1] >= y[2:])
        keep = np.concatenate(([False], inner, [False]))
        t, y = t[keep], y[keep]
        min_points = max(3, min_points // 3)
    if t.size < min_points:
        raise InsufficientDecayWindow(
            f"only {t.size} usable points beyond the roof, need {min_points}")
    slope, intercept = np.polyfit(t, np.log(y), 1)
    misfit = np.log(y) - (slope * t + intercept)
    drop = abs(slope) * (t[-1] - t[0])
    residual = float(np.sqrt(np.mean(misfit**2)) / max(drop, 1e-300))
    return DecayFit(eta=-float(slope), amplitude=float(np.exp(intercept)),
                    fit_residual=residual, window=(float(t[0]), float(t[-1])),
                    n_points=int(t.size))


def log_integral(x: float) -> float:
    """Integral of 1/log from 2 to x, for x > 2."""
    if x <= 2.0:
        raise ValueError("the logarithmic integral here starts at 2")
    return float(expi(math.log(x)) - expi(math.log(2.0)))


@dataclass
class EquidistributionRow:
    T: float
    count: int
    s1: float
    s2: float
    s3: float
    li_ratio: float


def holonomy_equidistribution(scheme: SchottkyScheme, T_values, delta: float,
                              capacity: int = GEODESIC_CLASS_CAPACITY
                              ) -> list[EquidistributionRow]:
    """Character averages of closed-geodesic holonomies against length cuts.

    Counts run over oriented traversals: each unoriented class contributes
    both directions, whose holonomy angles are opposite, so s_k is the
    modulus of the mean of cos(k angle).  Nontrivial characters should
    average out as T grows while the traversal count tracks the logarithmic
    integral of exp(delta T).
    """
    T_values = sorted(float(T) for T in T_values)
    if T_values[0] * delta <= math.log(2.0):
        raise ValueError("smallest cut must satisfy exp(delta T) > 2")
    classes = closed_geodesics(scheme, T_values[-1], capacity=capacity)
    lengths = np.array([g.length for g in classes])
    angles = np.array([g.angle for g in classes])
    rows = []
    for T in T_values:
        sel = lengths <= T
        count = 2 * int(sel.sum())
        if count == 0:
            rows.append(EquidistributionRow(T, 0, math.nan, math.nan, math.nan,
                                            0.0))
            continue
        s = [abs(float(np.mean(np.cos(k * angles[sel])))) for k in (1, 2, 3)]
        ratio = count / log_integral(math.exp(delta * T))
        rows.append(EquidistributionRow(T=T, count=count, s1=s[0], s2=s[1],
                                        s3=s[2], li_ratio=ratio))
    return rows
