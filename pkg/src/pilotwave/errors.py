"""Exception hierarchy shared by the simulation and analysis modules."""


class PilotWaveError(Exception):
    """Base class for every error raised by this package."""


class SimulationError(PilotWaveError):
    """A numerical experiment could not be carried out as configured."""


class AnalysisError(PilotWaveError):
    """A sequence analysis could not be carried out."""


# wavefield
class WidthTooSmall(SimulationError):
    pass


class PacketClipped(SimulationError):
    pass


class StepTooLarge(SimulationError):
    pass


# pilot
class NodeProximity(SimulationError):
    pass


class NodeUnresolvable(SimulationError):
    pass


# sampling
class FileExhausted(SimulationError):
    pass


# cointoss
class ExactZero(SimulationError):
    pass


class ConfigError(PilotWaveError):
    """Invalid experiment or toss configuration."""


# equilibrium
class NullFiber(SimulationError):
    pass


# randomness
class SequenceTooShort(AnalysisError):
    pass


# classicalflip
class QuadratureUnderresolved(SimulationError):
    pass
