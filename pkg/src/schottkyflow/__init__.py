"""Numerical laboratory for Schottky group symbolic dynamics.

Markov coding of the boundary action, return-time and holonomy cocycles
from conformal derivatives, discretized transfer operators (plain and
twisted by rotor characters), Ruelle-Perron-Frobenius eigendata, pressure
and critical exponents, empirical spectral gaps, correlation functions of
the holonomy suspension flow, and holonomy statistics of closed geodesics.
"""

__version__ = "0.1.0"

from .geometry import (
    Disk,
    LoxodromicData,
    MoebiusMap,
    NotLoxodromic,
    PoleAt,
    PoleInside,
    PoleOnBoundary,
    apply,
    derivative,
    image_disk,
    is_real,
    loxodromic_data,
)
from .coding import (
    BranchCocycle,
    CapacityExceeded,
    Cylinder,
    CylinderTower,
    EmptyBall,
    GeodesicClass,
    InadmissibleBranch,
    OutsideCoding,
    SchottkyScheme,
    Symbol,
    ValidationReport,
    Word,
    branch,
    closed_geodesics,
    cocycle,
    cylinders,
    limit_points,
    ncp_spread,
    validate,
    word_cocycle,
)
from .transfer import (
    BracketFailure,
    NoConvergence,
    NormalizedWeights,
    RPFData,
    TransferMatrix,
    TwistParams,
    assemble,
    dimension,
    iterate_decay,
    normalize,
    pressure,
    rpf,
)
from .spectral import (
    GapReport,
    InsufficientWords,
    LnicResult,
    SweepGrid,
    gap_sweep,
    lnic_probe,
    small_a_stability,
)
from .correlation import (
    CorrelationSeries,
    DecayFit,
    Divergence,
    HorizonExceeded,
    InsufficientDecayWindow,
    LaplaceResult,
    Observable,
    fit_decay,
    hat_phi,
    holonomy_equidistribution,
    laplace_of_series,
    laplace_series,
    upsilon,
)
from .fractal import box_counting_dimension
from .fixtures import fuchsian_pair, twisted_pair
