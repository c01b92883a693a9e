"""Exception types shared across the package."""


class MaterialFileError(ValueError):
    """Raised with a line-anchored message when a material file fails validation."""


class SingularMediumError(ValueError):
    """A permittivity component vanishes where the formula needs to divide by it."""


class NonHyperbolicError(ValueError):
    """Operation requires Re[eps_par * eps_perp] < 0 at this frequency."""


class ConeSingularityError(ValueError):
    """Field evaluated exactly on the lossless resonance cone."""


class NoResonanceError(ValueError):
    """The requested aspect ratio is outside the attainable range over the band."""


class DivergenceError(ValueError):
    """Formula diverges for the requested parameters (e.g. h -> 0 self response)."""


class StiffnessError(RuntimeError):
    """Adaptive step size underflowed; the problem is too stiff for the explicit pair."""


class TraceDriftError(RuntimeError):
    """Density-matrix trace drifted beyond tolerance during integration."""


class ChannelError(ValueError):
    """Quantum channel fails trace preservation beyond tolerance."""


class ScenarioError(ValueError):
    """Scenario configuration failed validation."""
