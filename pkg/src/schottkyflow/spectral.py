"""Empirical spectral gaps of twisted operators and non-integrability probes.

Decay exponents are measured from iterate norms of the normalized operators
over a frequency/character grid: eta(b, k) is minus the fitted slope of the
log norm sequence over the stable tail window.  Dense eigensolves stay
available as a cross-check at small depth.  The probe quantifies joint
oscillation of the (tau, theta) cocycle pair through differences of word
cocycles along competing inverse branches.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .coding import SchottkyScheme, limit_points, _word_cocycle_raw
from .geometry import wrap_angle
from .transfer import NormalizedWeights, TwistParams, iterate_decay, normalize, nu_norm


class InsufficientWords(ValueError):
    """Not enough admissible words to form competing branch pairs."""


def fit_log_decay(norms: np.ndarray, start: int, stop: int) -> tuple[float, float]:
    """(eta, residual) from a linear fit of log norms over [start, stop].

    eta is minus the slope; the residual is the rms misfit relative to the
    total fitted drop over the window, so a clean exponential tail scores
    close to zero.
    """
    js = np.arange(start, stop + 1)
    logn = np.log(norms[start:stop + 1])
    slope, intercept = np.polyfit(js, logn, 1)
    misfit = logn - (slope * js + intercept)
    drop = abs(slope) * (stop - start)
    residual = float(np.sqrt(np.mean(misfit**2)) / max(drop, 1e-300))
    return -float(slope), residual


@dataclass(frozen=True)
class SweepGrid:
    b_values: tuple[float, ...]
    k_values: tuple[int, ...]
    depth: int = 8
    iterations: int = 100

    def __post_init__(self):
        if not self.b_values or not self.k_values:
            raise ValueError("sweep grids must be nonempty")
        if self.iterations < 20:
            raise ValueError("need at least 20 iterations for a stable tail fit")
        object.__setattr__(self, "b_values", tuple(float(b) for b in self.b_values))
        object.__setattr__(self, "k_values", tuple(int(k) for k in self.k_values))


@dataclass
class GapRow:
    b: float
    k: int
    eta: float
    fit_residual: float
    flagged: bool


@dataclass
class GapReport:
    rows: list[GapRow]
    threshold: float
    depth: int
    iterations: int
    seed: int

    @property
    def eta_untwisted(self) -> float | None:
        for r in self.rows:
            if r.b == 0.0 and r.k == 0:
                return r.eta
        return None

    @property
    def min_eta_twisted(self) -> float:
        """Minimum over the grid excluding the untwisted point (0, 0)."""
        vals = [r.eta for r in self.rows if not (r.b == 0.0 and r.k == 0)]
        return min(vals) if vals else math.nan

    def row(self, b: float, k: int) -> GapRow:
        for r in self.rows:
            if r.b == b and r.k == k:
                return r
        raise KeyError((b, k))


def seeded_unit_vector(n: int, nu_U: np.ndarray, seed: int) -> np.ndarray:
    """Fixed pseudo-random real start vector of equilibrium norm one."""
    v = np.random.default_rng(seed).standard_normal(n)
    return v / nu_norm(v, nu_U)


def gap_sweep(scheme, grid: SweepGrid, weights: NormalizedWeights | None = None,
              seed: int = 0, threshold: float = 0.0) -> GapReport:
    """Fitted decay exponent of the normalized twisted operator per (b, k).

    The same seeded start vector drives every grid point; eta comes from the
    second half of the iterate norms.  Rows with eta below the threshold are
    flagged; the untwisted point is reported but never enters the minimum.
    """
    if weights is None:
        weights = normalize(scheme, grid.depth)
    n = grid.iterations
    H0 = seeded_unit_vector(weights.nu_U.size, weights.nu_U, seed)
    rows = []
    for b in grid.b_values:
        for k in grid.k_values:
            norms = iterate_decay(scheme, grid.depth, TwistParams(0.0, b, k),
                                  H0, n, weights=weights)
            eta, residual = fit_log_decay(norms, n // 2, n)
            rows.append(GapRow(b=b, k=k, eta=eta, fit_residual=residual,
                               flagged=eta < threshold))
    return GapReport(rows=rows, threshold=threshold, depth=grid.depth,
                     iterations=n, seed=seed)


@dataclass
class StabilityRow:
    a: float
    eta: float
    fit_residual: float
    rel_change: float


def small_a_stability(scheme, a_values, b: float, k: int, depth: int = 8,
                      iterations: int = 100, seed: int = 0,
                      delta: float | None = None) -> list[StabilityRow]:
    """eta(a; b, k) across exponent offsets, same seeded start vector.

    The offsets must stay within a fifth of the critical exponent so the
    normalized operator remains in its perturbative regime.
    """
    base_weights = normalize(scheme, depth, a=0.0, delta=delta)
    delta = base_weights.delta
    a_values = [float(a) for a in a_values]
    for a in a_values:
        if abs(a) > 0.2 * delta:
            raise ValueError(f"offset {a} exceeds 0.2 * delta = {0.2 * delta:.4f}")
    H0 = seeded_unit_vector(base_weights.nu_U.size, base_weights.nu_U, seed)
    n = iterations
    rows = []
    eta0 = None
    for a in sorted(a_values, key=abs):
        w = base_weights if a == 0.0 else normalize(scheme, depth, a=a, delta=delta)
        norms = iterate_decay(scheme, depth, TwistParams(a, b, k), H0, n, weights=w)
        eta, residual = fit_log_decay(norms, n // 2, n)
        if a == 0.0:
            eta0 = eta
        rows.append(StabilityRow(a=a, eta=eta, fit_residual=residual,
                                 rel_change=math.nan))
    if eta0 is None:
        norms = iterate_decay(scheme, depth, TwistParams(0.0, b, k), H0, n,
                              weights=base_weights)
        eta0, _ = fit_log_decay(norms, n // 2, n)
    for r in rows:
        r.rel_change = abs(r.eta - eta0) / abs(eta0) if eta0 else math.nan
    rows.sort(key=lambda r: r.a)
    return rows


@dataclass
class LnicResult:
    """Numerical local non-integrability certificate.

    value is the smallest pairing over probed plane directions: positive
    means every direction in the (time, rotation) plane sees first-order
    oscillation between competing branch words somewhere in the sample.
    """

    value: float
    omega_angles: np.ndarray
    omega_values: np.ndarray
    m2: int
    n_words: int
    base_points: list[complex] = field(default_factory=list)


def _branch_pair_words(scheme: SchottkyScheme, m2: int, anchor: int,
                       max_words: int) -> list[tuple[int, ...]]:
    """Admissible length-m2 words applicable to points of the anchor disk."""
    succ = scheme.successor_table()
    words = [(x,) for x in range(scheme.n_symbols)]
    for _ in range(m2 - 1):
        words = [w + (int(y),) for w in words for y in succ[w[-1]]]
    words = [w for w in words if scheme.bar(w[-1]) != anchor]
    if len(words) > max_words:
        stride = len(words) // max_words
        words = words[::stride][:max_words]
    return words


def lnic_probe(scheme: SchottkyScheme, m2: int = 3, n_points: int = 5,
               seed: int = 0, n_omega: int = 16, fd_step: float = 1e-5,
               max_words: int = 6, directions: list[complex] | None = None,
               anchor: int = 0) -> LnicResult:
    """Minimal directional oscillation of the branch-comparison cocycle.

    For base points u in the anchor disk and word pairs (alpha_0, alpha_j),
    the comparison map is the componentwise difference of word cocycles
    (tau, theta).  Finite differences in u give its directional derivative;
    the probe is the minimum over plane directions omega of the maximum over
    word pairs and movement directions of |<d(comparison), omega>|.  Fuchsian
    schemes move along their real axis only, which kills the theta component
    and reproduces the degenerate case.
    """
    if m2 < 2:
        raise ValueError("word length must be at least 2")
    words = _branch_pair_words(scheme, m2, anchor, max_words)
    if len(words) < 2:
        raise InsufficientWords(
            f"need at least two admissible length-{m2} words at the anchor disk")
    alpha0, rest = words[0], words[1:]
    if directions is None:
        if scheme.is_fuchsian():
            directions = [1.0 + 0.0j]
        else:
            directions = [np.exp(1j * np.pi * m / 4) for m in range(4)]
    pts = limit_points(scheme, 4096, seed=seed)
    disk = scheme.disks[anchor]
    inside = pts[disk.contains(pts, margin=2 * fd_step)]
    if inside.size < n_points:
        raise InsufficientWords("not enough sampled base points in the anchor disk")
    stride = max(1, inside.size // n_points)
    base_points = [complex(z) for z in inside[::stride][:n_points]]

    def comparison(word, z):
        t0, th0 = _word_cocycle_raw(scheme, alpha0, z)
        t1, th1 = _word_cocycle_raw(scheme, word, z)
        return t0 - t1, th0 - th1

    omega_angles = np.linspace(0.0, np.pi, n_omega, endpoint=False)
    grads = []
    for u in base_points:
        per_point = []
        for word in rest:
            for e in directions:
                tp, hp = comparison(word, u + fd_step * e)
                tm, hm = comparison(word, u - fd_step * e)
                dtau = (tp - tm) / (2 * fd_step)
                dtheta = wrap_angle(hp - hm) / (2 * fd_step)
                per_point.append((dtau, dtheta))
        grads.append(np.array(per_point))
    omega_values = np.empty(n_omega)
    for i, psi in enumerate(omega_angles):
        w = np.array([math.cos(psi), math.sin(psi)])
        # worst base point of the best word pair and direction
        omega_values[i] = min(np.max(np.abs(g @ w)) for g in grads)
    return LnicResult(value=float(omega_values.min()), omega_angles=omega_angles,
                      omega_values=omega_values, m2=m2, n_words=len(words),
                      base_points=base_points)
