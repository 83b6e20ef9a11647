# experiments/exceptions.py


class ConfigError(ValueError):
    pass


class UnknownConfigKey(ConfigError):
    pass


class MalformedConfigValue(ConfigError):
    pass


class ConfigConstraintViolation(ConfigError):
    """El valor es legible pero viola una restricción del modelo."""
