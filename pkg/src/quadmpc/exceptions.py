"""Error types shared across the package."""


class QuadMpcError(Exception):
    """Base class for all library errors."""


class DivergedRolloutError(QuadMpcError):
    """A forward rollout produced a non-finite state."""

    def __init__(self, step: int, detail: str = ""):
        self.step = step
        msg = f"rollout diverged at step {step}"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


class SingularPendulumError(QuadMpcError):
    """Pendulum height reached zero; the equation of motion is singular."""


class SingularDynamicsError(QuadMpcError):
    """The next-state Jacobian block of an implicit model is singular."""

    def __init__(self, step: int):
        self.step = step
        super().__init__(f"singular next-state Jacobian at step {step}")


class InfeasibleGaitError(QuadMpcError):
    """The gait leaves some time step without any stance foot."""


class ScenarioError(QuadMpcError):
    """A scenario file failed validation; `field` is the offending key path."""

    def __init__(self, field: str, detail: str):
        self.field = field
        super().__init__(f"{field}: {detail}")
