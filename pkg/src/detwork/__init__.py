"""Exact deterministic work extraction from many copies of a quantum system."""
from .errors import (
    CltInapplicableError,
    DetworkError,
    FullSupportError,
    GroundOccupiedError,
    InfeasibleShiftError,
    InvariantViolation,
    NoSignChangeError,
    ProtocolError,
    ResourceGuardError,
    SpectrumError,
)
from .spectrum import (
    LatticeSpectrum,
    LevelSpec,
    SpectrumSpec,
    dominates,
    eps_min,
    normalize_ground,
    parse_spectrum,
    to_lattice,
)
from .shellcount import ShellCountVector, naive_shell_counts, shell_counts
from .rate import RateResult, binomial_rate_2level, brute_force_mdew, max_det_shift, rate_n, rate_sweep
from .protocol import (
    DiagonalState,
    ProtocolTable,
    WorkDistribution,
    build_protocol,
    lcm_protocol,
    simulate_tpm,
    tensor_power_state,
    verify_protocol,
)
from .bounds import (
    clt_estimate,
    ergotropy_diagonal,
    ergotropy_upper_bound,
    gaussian_shell_density,
    gibbs_filtered_state,
    lcm_plan,
    lower_bounds,
    solve_beta_star,
    thermo_curves,
)
from .approx import bounded_fluctuation_protocol, plan_bounded_fluctuation, snap_to_lattice, verify_band

__version__ = "0.1.0"
