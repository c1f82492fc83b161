"""metronlab: a deterministic numerical laboratory for self-consistent
trapped-mode solutions, wave-particle resonance trapping, time-symmetric
Klein-Gordon interaction kernels and finite gauge-algebra checks."""

__version__ = "0.1.0"

from . import algebra, bragg, errors, greens, numerics, orbits, trapped_modes  # noqa: F401
