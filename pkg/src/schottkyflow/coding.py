"""Markov coding of a Schottky group acting on the boundary sphere.

A rank-r scheme pairs 2r disjoint disks through r loxodromic generators:
g_i maps the exterior of its source disk onto the interior of its target
disk.  Symbols 0..r-1 stand for the generators, symbols r..2r-1 for their
inverses, and bar(x) = x +- r is the involution.  The expanding boundary
map sends each disk D_x over the complement of D_bar(x) via the inverse
generator, and its inverse branches are the generator maps themselves.

The one-step cocycle of a branch at a point is the pair
(tau, theta) = (-log|g'|, -arg g'): the return-time increment and the
holonomy rotation of the frame flow, both read off the conformal
derivative.  Word cocycles add these along admissible words; their sums
over periodic words reproduce geodesic lengths and holonomies through the
multiplier of the corresponding group element.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import (
    Disk,
    MoebiusMap,
    apply,
    circumcircle,
    derivative,
    fixed_points,
    image_disk,
    is_real,
    loxodromic_data,
    require_finite,
    wrap_angle,
)

DISJOINT_MARGIN = 1e-9
PAIRING_TOL = 1e-8
CYLINDER_CAPACITY = 10**7
GEODESIC_CLASS_CAPACITY = 10**5
CONTRACTION_DEPTH_BOUND = 3

LETTERS = "abcdefghijklmnopqrstuvwxyz"


class InadmissibleBranch(ValueError):
    """Branch applied to a point inside the forbidden partner disk."""


class OutsideCoding(ValueError):
    """Point lies in none of the scheme disks."""


class CapacityExceeded(RuntimeError):
    """Enumeration would exceed the configured capacity."""


class EmptyBall(ValueError):
    """No sampled limit point inside the requested ball."""


def symbol_label(x: int, rank: int) -> str:
    """Generators print as a..z, inverses as A..Z."""
    return LETTERS[x] if x < rank else LETTERS[x - rank].upper()


@dataclass(frozen=True)
class Symbol:
    index: int
    rank: int

    @property
    def bar(self) -> int:
        return (self.index + self.rank) % (2 * self.rank)

    @property
    def label(self) -> str:
        return symbol_label(self.index, self.rank)


@dataclass(frozen=True)
class Word:
    """Admissible finite symbol sequence: never x followed by bar(x)."""

    symbols: tuple[int, ...]
    rank: int

    def __post_init__(self):
        n = 2 * self.rank
        for s in self.symbols:
            if not 0 <= s < n:
                raise ValueError(f"symbol {s} outside alphabet of size {n}")
        for s, t in zip(self.symbols, self.symbols[1:]):
            if t == (s + self.rank) % n:
                raise InadmissibleBranch(f"inadmissible pair {s},{t} in word")

    def __len__(self):
        return len(self.symbols)

    def __iter__(self):
        return iter(self.symbols)

    def __getitem__(self, i):
        return self.symbols[i]

    @property
    def label(self) -> str:
        return "".join(symbol_label(s, self.rank) for s in self.symbols)


@dataclass(frozen=True)
class BranchCocycle:
    """Return-time increment and holonomy angle of one inverse branch."""

    tau: float
    theta: float

    def __post_init__(self):
        if not math.isfinite(self.tau):
            raise ValueError("non-finite return time")
        object.__setattr__(self, "theta", wrap_angle(self.theta))


@dataclass(frozen=True)
class Cylinder:
    word: Word
    representative: complex


class SchottkyScheme:
    """Paired disks and generators; owns the coding and all cocycle data."""

    def __init__(self, generators, source_disks, target_disks):
        generators = tuple(generators)
        source_disks = tuple(source_disks)
        target_disks = tuple(target_disks)
        r = len(generators)
        if r < 2:
            # rank-1 groups are elementary and the coding is not mixing
            raise ValueError("Schottky scheme needs rank >= 2")
        if r > len(LETTERS):
            raise ValueError(f"rank capped at {len(LETTERS)}")
        if len(source_disks) != r or len(target_disks) != r:
            raise ValueError("one source and one target disk per generator")
        self.rank = r
        self.generators = generators
        # symbol x < r acts by g_x and owns the target disk; x >= r acts by
        # the inverse generator and owns the source disk
        self.maps = generators + tuple(g.inverse() for g in generators)
        self.disks = target_disks + source_disks
        n = 2 * r
        self._A = np.array([m.a for m in self.maps])
        self._B = np.array([m.b for m in self.maps])
        self._C = np.array([m.c for m in self.maps])
        self._D = np.array([m.d for m in self.maps])
        self.centers = np.array([d.center for d in self.disks])
        self.radii = np.array([d.radius for d in self.disks])
        self.symbols = tuple(Symbol(x, r) for x in range(n))
        self._towers: dict[int, CylinderTower] = {}

    @classmethod
    def from_pairings(cls, pairings) -> "SchottkyScheme":
        """Build from (source_center, target_center, radius) triples."""
        gens, sources, targets = [], [], []
        for cm, cp, rad in pairings:
            gens.append(MoebiusMap.disk_pairing(cm, cp, rad))
            sources.append(Disk(cm, rad))
            targets.append(Disk(cp, rad))
        return cls(gens, sources, targets)

    @property
    def n_symbols(self) -> int:
        return 2 * self.rank

    def bar(self, x: int) -> int:
        return (x + self.rank) % self.n_symbols

    def word(self, symbols) -> Word:
        return Word(tuple(int(s) for s in symbols), self.rank)

    def is_fuchsian(self) -> bool:
        return all(is_real(g) for g in self.generators)

    def transition_matrix(self) -> np.ndarray:
        n = self.n_symbols
        T = np.ones((n, n), dtype=np.int64)
        for x in range(n):
            T[x, self.bar(x)] = 0
        return T

    def mixing_exponent(self) -> int:
        """Smallest power of the transition matrix with all entries positive."""
        T = self.transition_matrix()
        P = T.copy()
        for k in range(1, self.n_symbols + 1):
            if np.all(P > 0):
                return k
            P = np.minimum(P @ T, 1)
        raise RuntimeError("transition matrix is not mixing")

    def successor_table(self) -> np.ndarray:
        n = self.n_symbols
        return np.array([[y for y in range(n) if y != self.bar(x)] for x in range(n)],
                        dtype=np.int8)

    def disk_index(self, z) -> int:
        """Index of the (closed) disk containing z, or -1."""
        hits = np.abs(z - self.centers) <= self.radii
        idx = np.nonzero(hits)[0]
        return int(idx[0]) if idx.size else -1

    def tower(self, depth: int, capacity: int = CYLINDER_CAPACITY) -> "CylinderTower":
        tow = self._towers.get(depth)
        if tow is None or tow.capacity < min(capacity, cylinder_count(self.rank, depth)):
            tow = CylinderTower.from_scheme(self, depth, capacity)
            self._towers[depth] = tow
        return tow


def cylinder_count(rank: int, depth: int) -> int:
    return 2 * rank * (2 * rank - 1) ** (depth - 1)


# ---------------------------------------------------------------------------
# branch maps and cocycles

def branch(scheme: SchottkyScheme, x: int, z: complex) -> complex:
    """Inverse branch owned by symbol x: maps admissible disks into D_x."""
    require_finite(z)
    d = scheme.disk_index(z)
    if d == scheme.bar(x):
        raise InadmissibleBranch(
            f"point {z} lies in the partner disk of symbol {symbol_label(x, scheme.rank)}")
    if d < 0:
        raise OutsideCoding(f"point {z} lies in no scheme disk")
    return apply(scheme.maps[x], z)


def cocycle(scheme: SchottkyScheme, x: int, z: complex) -> BranchCocycle:
    """One-step (tau, theta) of branch x at z, from the conformal derivative."""
    require_finite(z)
    d = scheme.disk_index(z)
    if d == scheme.bar(x):
        raise InadmissibleBranch(
            f"point {z} lies in the partner disk of symbol {symbol_label(x, scheme.rank)}")
    if d < 0:
        raise OutsideCoding(f"point {z} lies in no scheme disk")
    g = derivative(scheme.maps[x], z)
    return BranchCocycle(tau=-math.log(abs(g)), theta=-np.angle(g))


def word_cocycle(scheme: SchottkyScheme, word, z: complex) -> BranchCocycle:
    """Componentwise cocycle sums along a word, theta reduced mod 2 pi.

    The empty word gives (0, 0).  Additivity: for a split word alpha+beta,
    word_cocycle(alpha+beta, z) = word_cocycle(beta, z)
                                  + word_cocycle(alpha, branch_of(beta)(z)).
    """
    tau, theta = _word_cocycle_raw(scheme, word, z)
    return BranchCocycle(tau, theta)


def _word_cocycle_raw(scheme: SchottkyScheme, word, z: complex) -> tuple[float, float]:
    """Unwrapped cocycle sums; used where angle differences must not jump."""
    symbols = word.symbols if isinstance(word, Word) else tuple(word)
    tau_sum = 0.0
    theta_sum = 0.0
    current = z
    for x in reversed(symbols):
        step = cocycle(scheme, x, current)
        tau_sum += step.tau
        theta_sum += -np.angle(derivative(scheme.maps[x], current))
        current = apply(scheme.maps[x], current)
    return tau_sum, theta_sum


def word_map(scheme: SchottkyScheme, word) -> MoebiusMap:
    """Group element of a word: composition of its branch maps.

    Long words grow entries past the point where the determinant can be
    re-checked in floating point, so the product trusts the structural
    normalization of its factors.
    """
    symbols = word.symbols if isinstance(word, Word) else tuple(word)
    a, b, c, d = 1.0 + 0.0j, 0.0j, 0.0j, 1.0 + 0.0j
    for x in symbols:
        g = scheme.maps[x]
        a, b, c, d = (a * g.a + b * g.c, a * g.b + b * g.d,
                      c * g.a + d * g.c, c * g.b + d * g.d)
    return MoebiusMap.unchecked(a, b, c, d)


# ---------------------------------------------------------------------------
# cylinder tower: all depth levels at once, vectorized

@dataclass
class CylinderLevel:
    depth: int
    firstsym: np.ndarray    # (n,) int8
    parent: np.ndarray      # (n,) int32 index of the shifted word one level down
    rep: np.ndarray         # (n,) complex cylinder representatives
    tau: np.ndarray         # (n,) one-step return time at the representative
    theta: np.ndarray       # (n,) one-step holonomy angle at the representative
    enc: np.ndarray         # (n,) int64 lexicographic word code
    word_tau: np.ndarray    # (n,) accumulated tau along the whole word

    @property
    def n(self) -> int:
        return self.firstsym.size


class CylinderTower:
    """Admissible words of every depth up to a cap, in lexicographic order.

    Representatives follow rep(w) = g_{w0}(rep(w[1:])) down to the center of
    the last symbol's disk, so shifting a word is exactly the parent pointer
    and sigma(rep(w)) = rep(w[1:]).
    """

    def __init__(self, n_symbols: int, levels: dict[int, CylinderLevel], capacity: int,
                 scheme: SchottkyScheme | None = None):
        self.n_symbols = n_symbols
        self.rank = n_symbols // 2
        self.levels = levels
        self.capacity = capacity
        self.scheme = scheme
        self._transfer_idx: dict[int, tuple] = {}

    @property
    def depth(self) -> int:
        return max(self.levels)

    def level(self, k: int) -> CylinderLevel:
        return self.levels[k]

    @staticmethod
    def _check_capacity(n_symbols: int, depth: int, capacity: int) -> None:
        if depth < 1:
            raise ValueError("depth must be >= 1")
        count = cylinder_count(n_symbols // 2, depth)
        if count > capacity:
            raise CapacityExceeded(
                f"{count} cylinders at depth {depth} exceed capacity {capacity}")

    @classmethod
    def from_scheme(cls, scheme: SchottkyScheme, depth: int,
                    capacity: int = CYLINDER_CAPACITY) -> "CylinderTower":
        n = scheme.n_symbols
        cls._check_capacity(n, depth, capacity)
        A, B, C, D = scheme._A, scheme._B, scheme._C, scheme._D

        def step(sym, z):
            a, b, c, d = A[sym], B[sym], C[sym], D[sym]
            den = c * z + d
            der = 1.0 / (den * den)
            return (a * z + b) / den, -np.log(np.abs(der)), -np.angle(der)

        sym0 = np.arange(n, dtype=np.int8)
        prev = scheme.centers[sym0]
        rep, tau, theta = step(sym0, prev)
        levels = {1: CylinderLevel(1, sym0, np.full(n, -1, np.int32), rep, tau, theta,
                                   np.arange(n, dtype=np.int64), tau.copy())}
        bar = (sym0.astype(np.int64) + scheme.rank) % n
        for k in range(2, depth + 1):
            lo = levels[k - 1]
            blocks = []
            for x in range(n):
                idx = np.nonzero(lo.firstsym != bar[x])[0].astype(np.int32)
                z_prev = lo.rep[idx]
                rep_x, tau_x, theta_x = step(np.int8(x), z_prev)
                enc_x = x * n ** (k - 1) + lo.enc[idx]
                blocks.append((np.full(idx.size, x, np.int8), idx, rep_x, tau_x,
                               theta_x, enc_x, tau_x + lo.word_tau[idx]))
            levels[k] = CylinderLevel(
                k,
                np.concatenate([b[0] for b in blocks]),
                np.concatenate([b[1] for b in blocks]),
                np.concatenate([b[2] for b in blocks]),
                np.concatenate([b[3] for b in blocks]),
                np.concatenate([b[4] for b in blocks]),
                np.concatenate([b[5] for b in blocks]),
                np.concatenate([b[6] for b in blocks]),
            )
        return cls(n, levels, capacity, scheme)

    @classmethod
    def constant_tau(cls, n_symbols: int, tau: float, depth: int,
                     capacity: int = CYLINDER_CAPACITY) -> "CylinderTower":
        """Symbolic mock with the same admissibility and constant return time."""
        cls._check_capacity(n_symbols, depth, capacity)
        n = n_symbols
        r = n // 2
        sym0 = np.arange(n, dtype=np.int8)
        levels = {1: CylinderLevel(1, sym0, np.full(n, -1, np.int32),
                                   np.zeros(n, complex), np.full(n, tau),
                                   np.zeros(n), np.arange(n, dtype=np.int64),
                                   np.full(n, tau))}
        bar = (sym0.astype(np.int64) + r) % n
        for k in range(2, depth + 1):
            lo = levels[k - 1]
            blocks = []
            for x in range(n):
                idx = np.nonzero(lo.firstsym != bar[x])[0].astype(np.int32)
                enc_x = x * n ** (k - 1) + lo.enc[idx]
                blocks.append((np.full(idx.size, x, np.int8), idx, enc_x))
            m = sum(b[0].size for b in blocks)
            levels[k] = CylinderLevel(
                k,
                np.concatenate([b[0] for b in blocks]),
                np.concatenate([b[1] for b in blocks]),
                np.zeros(m, complex),
                np.full(m, tau),
                np.zeros(m),
                np.concatenate([b[2] for b in blocks]),
                np.full(m, k * tau),
            )
        return cls(n, levels, capacity)

    def words(self, depth: int) -> np.ndarray:
        """(n, depth) symbol matrix, rows in lexicographic order."""
        lv = self.levels[depth]
        out = np.empty((lv.n, depth), dtype=np.int8)
        idx = np.arange(lv.n)
        for j in range(depth):
            level_j = self.levels[depth - j]
            out[:, j] = level_j.firstsym[idx]
            idx = level_j.parent[idx]
        return out

    def suffix_indices(self, depth: int, n_levels: int) -> np.ndarray:
        """(n, n_levels) indices of the j-step shifted words, level depth - j."""
        if n_levels > depth:
            raise ValueError("cannot shift past the word length")
        lv = self.levels[depth]
        out = np.empty((lv.n, n_levels), dtype=np.int64)
        idx = np.arange(lv.n)
        for j in range(n_levels):
            out[:, j] = idx
            idx = self.levels[depth - j].parent[idx]
        return out

    def prefix_index(self, enc: np.ndarray, at_depth: int, prefix_depth: int) -> np.ndarray:
        """Indices at level prefix_depth of the leading prefix_depth symbols."""
        shift = self.n_symbols ** (at_depth - prefix_depth)
        return np.searchsorted(self.levels[prefix_depth].enc, enc // shift)

    def transfer_indices(self, depth: int):
        """Index arrays backing transfer-operator products at one depth.

        Returns (children, row_groups, prefix_idx) where children[p] lists
        the depth-k words whose shift is the depth-(k-1) word p, row_groups[p]
        lists the depth-k words whose leading truncation is p, and
        prefix_idx[i] is the truncation of word i.  Depth 1 returns None and
        is handled by a closed formula.
        """
        if depth == 1:
            return None
        cached = self._transfer_idx.get(depth)
        if cached is not None:
            return cached
        lv, lo = self.levels[depth], self.levels[depth - 1]
        deg = self.n_symbols - 1
        children = np.argsort(lv.parent, kind="stable").astype(np.int32).reshape(lo.n, deg)
        prefix_idx = self.prefix_index(lv.enc, depth, depth - 1).astype(np.int32)
        row_groups = np.argsort(prefix_idx, kind="stable").astype(np.int32).reshape(lo.n, deg)
        out = (children, row_groups, prefix_idx)
        self._transfer_idx[depth] = out
        return out


def cylinders(scheme: SchottkyScheme, depth: int,
              capacity: int = CYLINDER_CAPACITY) -> list[Cylinder]:
    """All depth-k cylinders with representatives, lexicographic order."""
    tower = scheme.tower(depth, capacity)
    words = tower.words(depth)
    reps = tower.level(depth).rep
    out = []
    for row, z in zip(words, reps):
        w = Word(tuple(int(s) for s in row), scheme.rank)
        if not scheme.disks[row[0]].contains(z):
            raise RuntimeError(f"representative {z} escaped disk of {w.label}")
        out.append(Cylinder(w, complex(z)))
    return out


# ---------------------------------------------------------------------------
# limit set sampling and the non-concentration probe

def limit_points(scheme: SchottkyScheme, n: int, word_length: int = 30,
                 seed: int = 0) -> np.ndarray:
    """n limit-set samples: random admissible words applied to base points."""
    rng = np.random.default_rng(seed)
    succ = scheme.successor_table()
    syms = np.empty((n, word_length), dtype=np.int8)
    syms[:, 0] = rng.integers(0, scheme.n_symbols, size=n)
    draws = rng.integers(0, scheme.n_symbols - 1, size=(n, word_length - 1))
    for j in range(1, word_length):
        syms[:, j] = succ[syms[:, j - 1], draws[:, j - 1]]
    z = scheme.centers[syms[:, -1]]
    for j in range(word_length - 1, -1, -1):
        s = syms[:, j]
        z = (scheme._A[s] * z + scheme._B[s]) / (scheme._C[s] * z + scheme._D[s])
    return z


def ncp_spread(points: np.ndarray, x: complex, w: complex, eps: float) -> float:
    """Largest |<y - x, w>| / eps over sampled limit points y in B_eps(x).

    A positive, seed-stable lower bound uniform over x, w and eps is the
    numerical non-concentration certificate; it collapses along the
    imaginary direction exactly for Fuchsian data.
    """
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    w = complex(w)
    if abs(w) == 0:
        raise ValueError("direction must be nonzero")
    w /= abs(w)
    d = np.asarray(points) - complex(x)
    ball = d[np.abs(d) <= eps]
    if ball.size == 0:
        raise EmptyBall(f"no sampled point within {eps} of {x}")
    return float(np.max(np.abs((ball * np.conj(w)).real))) / eps


# ---------------------------------------------------------------------------
# closed geodesics

@dataclass(frozen=True)
class GeodesicClass:
    """One unoriented primitive closed geodesic."""

    word: Word
    length: float
    angle: float

    @property
    def class_id(self) -> str:
        return self.word.label


def _inverse_word(word: tuple[int, ...], rank: int) -> tuple[int, ...]:
    n = 2 * rank
    return tuple((s + rank) % n for s in reversed(word))


def _canonical_class(word: tuple[int, ...], rank: int) -> tuple[int, ...]:
    """Least rotation among the word and its inverse: unoriented class id."""
    best = None
    for w in (word, _inverse_word(word, rank)):
        for i in range(len(w)):
            rot = w[i:] + w[:i]
            if best is None or rot < best:
                best = rot
    return best


def _is_primitive(word: tuple[int, ...]) -> bool:
    L = len(word)
    for d in range(1, L):
        if L % d == 0 and word == word[d:] + word[:d]:
            return False
    return True


def min_branch_tau(scheme: SchottkyScheme) -> float:
    """Lower bound for the one-step tau of any admissible branch."""
    best = math.inf
    for x in range(scheme.n_symbols):
        c, d = scheme._C[x], scheme._D[x]
        for y in range(scheme.n_symbols):
            if y == scheme.bar(x):
                continue
            closest = abs(c * scheme.centers[y] + d) - abs(c) * scheme.radii[y]
            if closest <= 0:
                return 0.0
            best = min(best, 2.0 * math.log(closest))
    return best


def closed_geodesics(scheme: SchottkyScheme, T: float,
                     capacity: int = GEODESIC_CLASS_CAPACITY) -> list[GeodesicClass]:
    """Primitive unoriented closed geodesics with length at most T.

    One entry per conjugacy class of cyclically reduced words, deduplicated
    by rotation and inversion; length and holonomy angle come from the
    multiplier of the group element.
    """
    if T <= 0:
        raise ValueError("length bound must be positive")
    step = min_branch_tau(scheme)
    if step <= 0:
        raise ValueError("scheme admits branches without a contraction bound")
    max_len = max(1, math.ceil(T / step))
    succ = scheme.successor_table()
    out = []
    for L in range(1, max_len + 1):
        for word in _cyclic_words(scheme, succ, L):
            if not _is_primitive(word):
                continue
            if word != _canonical_class(word, scheme.rank):
                continue
            data = loxodromic_data(word_map(scheme, word))
            if data.translation_length <= T:
                out.append(GeodesicClass(Word(word, scheme.rank),
                                         data.translation_length,
                                         data.rotation_angle))
                if len(out) > capacity:
                    raise CapacityExceeded(
                        f"more than {capacity} geodesic classes below T={T}")
    out.sort(key=lambda g: (g.length, g.class_id))
    return out


def _cyclic_words(scheme: SchottkyScheme, succ: np.ndarray, L: int):
    """Admissible words of length L that close up admissibly."""
    n = scheme.n_symbols
    stack = [(x,) for x in range(n)]
    for _ in range(L - 1):
        stack = [w + (int(y),) for w in stack for y in succ[w[-1]]]
    for w in stack:
        if L == 1 or w[0] != scheme.bar(w[-1]):
            yield w


def attracting_fixed_point(scheme: SchottkyScheme, word) -> complex:
    """Fixed point of the word's branch composition inside its cylinder."""
    p, _ = fixed_points(word_map(scheme, word))
    return p


# ---------------------------------------------------------------------------
# scheme validation

@dataclass
class ValidationReport:
    ok: bool = True
    failures: list[str] = field(default_factory=list)
    disk_margin: float = math.inf
    pairing_residuals: list[float] = field(default_factory=list)
    containment_slacks: list[float] = field(default_factory=list)
    derivative_modulus_range: tuple[float, float] = (math.nan, math.nan)
    contraction_depth: int | None = None
    mixing_exponent: int | None = None

    def fail(self, message: str) -> None:
        self.ok = False
        self.failures.append(message)

    def as_dict(self) -> dict:
        return {
            "ok": self.ok,
            "failures": list(self.failures),
            "disk_margin": self.disk_margin,
            "pairing_residuals": list(self.pairing_residuals),
            "containment_slacks": list(self.containment_slacks),
            "derivative_modulus_min": self.derivative_modulus_range[0],
            "derivative_modulus_max": self.derivative_modulus_range[1],
            "contraction_depth": self.contraction_depth,
            "mixing_exponent": self.mixing_exponent,
        }


def validate(scheme: SchottkyScheme) -> ValidationReport:
    """Check every scheme invariant; failures are reported, never raised."""
    report = ValidationReport()
    n = scheme.n_symbols

    # pairwise disjointness with margin
    margin = math.inf
    for i in range(n):
        for j in range(i + 1, n):
            gap = (abs(scheme.centers[i] - scheme.centers[j])
                   - scheme.radii[i] - scheme.radii[j])
            margin = min(margin, gap)
            if gap < DISJOINT_MARGIN:
                report.fail(
                    f"disks {symbol_label(i, scheme.rank)} and "
                    f"{symbol_label(j, scheme.rank)} overlap (margin {gap:.3e})")
    report.disk_margin = margin

    # each generator must send its source boundary onto its target boundary
    # and the exterior of the source into the interior of the target
    for i, g in enumerate(scheme.generators):
        source, target = scheme.disks[i + scheme.rank], scheme.disks[i]
        label = symbol_label(i, scheme.rank)
        samples = source.boundary_points(64)
        try:
            images = apply(g, samples)
        except Exception as exc:  # pole on the sampled boundary
            report.fail(f"generator {label}: {exc}")
            report.pairing_residuals.append(math.inf)
            report.containment_slacks.append(-math.inf)
            continue
        residual = float(np.max(np.abs(np.abs(images - target.center) - target.radius)))
        report.pairing_residuals.append(residual)
        if residual > PAIRING_TOL:
            report.fail(f"generator {label} pairing residual "
                        f"{residual:.3e} exceeds {PAIRING_TOL}")
        # image circle of the source boundary, fitted from three points and
        # cross-checked on all samples; the exterior (which contains infinity)
        # must land inside it, and the circle must sit inside the target disk
        try:
            img = circumcircle(*(complex(w) for w in images[[0, 21, 43]]))
        except ValueError as exc:
            report.fail(f"generator {label}: degenerate boundary image ({exc})")
            report.containment_slacks.append(-math.inf)
            continue
        circle_residual = float(np.max(np.abs(np.abs(images - img.center) - img.radius)))
        slack = target.radius - (abs(img.center - target.center) + img.radius)
        report.containment_slacks.append(slack)
        if circle_residual > PAIRING_TOL:
            report.fail(f"generator {label} source boundary does not map to "
                        f"a circle (residual {circle_residual:.3e})")
        if slack < -DISJOINT_MARGIN:
            report.fail(f"generator {label} image circle leaves its target "
                        f"disk (slack {slack:.3e})")
        if abs(g.c) < 1e-14 or not img.contains(g.a / g.c):
            report.fail(f"generator {label} does not map the source exterior "
                        f"inside the image circle")

    # every branch must carry each admissible disk into its own disk
    for x in range(n):
        for y in range(n):
            if y == scheme.bar(x):
                continue
            try:
                img = image_disk(scheme.maps[x], scheme.disks[y])
            except Exception as exc:
                report.fail(f"branch {symbol_label(x, scheme.rank)} on disk "
                            f"{symbol_label(y, scheme.rank)}: {exc}")
                continue
            slack = scheme.radii[x] - (abs(img.center - scheme.centers[x]) + img.radius)
            if slack < -DISJOINT_MARGIN:
                report.fail(f"branch {symbol_label(x, scheme.rank)} does not map "
                            f"disk {symbol_label(y, scheme.rank)} into its own "
                            f"disk (slack {slack:.3e})")

    # pole of every branch map must hide inside the partner disk
    for x in range(n):
        pole = scheme.maps[x].pole()
        if pole is None or not scheme.disks[scheme.bar(x)].contains(pole):
            report.fail(f"pole of branch {symbol_label(x, scheme.rank)} "
                        f"is not confined to its partner disk")

    report.mixing_exponent = scheme.mixing_exponent()

    if report.ok:
        # single-branch derivative moduli over depth-2 cylinder representatives
        # and the eventual-contraction depth from accumulated word derivatives
        try:
            tower = scheme.tower(min(3, CONTRACTION_DEPTH_BOUND) + 1)
        except CapacityExceeded:
            tower = scheme.tower(2)
        lv2 = tower.level(min(2, tower.depth))
        mods = np.exp(-lv2.tau)
        report.derivative_modulus_range = (float(mods.min()), float(mods.max()))
        for k in range(1, tower.depth + 1):
            if tower.level(k).word_tau.min() > 0:
                report.contraction_depth = k
                break
        if report.contraction_depth is None:
            report.fail(
                f"no uniform contraction up to depth {tower.depth}")
        elif report.contraction_depth > CONTRACTION_DEPTH_BOUND:
            report.fail(
                f"contraction depth {report.contraction_depth} exceeds "
                f"{CONTRACTION_DEPTH_BOUND}")
    return report
