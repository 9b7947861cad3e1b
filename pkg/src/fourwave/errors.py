"""Error taxonomy shared by all solver and pipeline stages.

Three broad families, which the command line front end maps onto exit
codes: configuration problems (bad input, out-of-range queries), physics
problems (no guided mode, no phase-matching root), and numerical
problems (iteration caps, unconverged quadrature, leaky windows).
"""


class FourwaveError(Exception):
    """Base class for all package errors."""


class ConfigError(FourwaveError):
    """Malformed or inconsistent run configuration."""


class OutOfRange(ConfigError):
    """A wavelength or frequency query outside a model's validity span."""


class NoData(ConfigError):
    """A required lookup table is empty."""


class PhysicsError(FourwaveError):
    """The model is fine but the requested physical solution does not exist."""


class NoGuidedMode(PhysicsError):
    """No eigenvalue above the cladding index for the requested mode."""


class NoRoot(PhysicsError):
    """Root finding found no solution in the allowed window."""


class EmptyResult(PhysicsError):
    """A search completed but nothing satisfied the hard constraints."""


class NumericsError(FourwaveError):
    """A solver or quadrature failed to reach its accuracy target."""


class NotConverged(NumericsError):
    """Eigensolver or iterative refinement hit its iteration cap."""


class BoundaryLeak(NumericsError):
    """Mode field at the window boundary above threshold; window too small."""


class GridMismatch(NumericsError):
    """Field operations require identical rasters; these differ."""


class NonMonotoneBeta(NumericsError):
    """beta(omega) from sampled n_eff is not strictly increasing."""


class FilterOutsideGrid(NumericsError):
    """A filter passband extends beyond the computed JSD grid."""


class QuadratureNotConverged(NumericsError):
    """Grid refinement did not bring the integral within tolerance."""


# Exit codes used by the CLI: 0 success, 1 physics, 2 config, 3 numerics.
def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, PhysicsError):
        return 1
    if isinstance(exc, ConfigError):
        return 2
    if isinstance(exc, NumericsError):
        return 3
    return 1
