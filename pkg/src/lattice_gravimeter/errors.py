from typing import List, Optional


class GravimeterError(Exception):
    pass


class ConfigError(GravimeterError):
    """Run configuration could not be parsed or is missing a key."""

    def __init__(self, message: str, key: Optional[str] = None) -> None:
        super().__init__(message)
        self.key = key


class ParamsError(GravimeterError):
    """Fatal violation of the physical parameter invariants."""

    def __init__(self, errors: List[str]) -> None:
        super().__init__("; ".join(errors))
        self.errors = list(errors)


class StateError(GravimeterError):
    pass


class OracleCapError(StateError):
    def __init__(self, n_particles: int, cap: int) -> None:
        super().__init__(
            f"{n_particles} particles exceed the Fock-space oracle cap of {cap}, use N <= {cap} for validation"
        )
        self.n_particles = n_particles
        self.cap = cap


class SimulationError(GravimeterError):
    def __init__(self, stage: str, message: str) -> None:
        super().__init__(f"stage '{stage}': {message}")
        self.stage = stage


class DegenerateVisibilityError(GravimeterError):
    pass


class FitError(GravimeterError):
    pass
