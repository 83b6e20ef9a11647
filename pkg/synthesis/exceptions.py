# synthesis/exceptions.py


class AssumptionViolated(ValueError):
    """El punto de medición no cumple las hipótesis de observabilidad."""


class SynthesisFailed(RuntimeError):
    pass
