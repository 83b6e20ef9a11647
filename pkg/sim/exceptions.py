# sim/exceptions.py


class BlowUp(FloatingPointError):
    """El esquema explícito divergió; ``time`` es el instante del aborto."""

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


class MisalignedDelay(ValueError):
    pass
