# experiments/config.py
"""
Lectura de configuraciones ``clave=valor``: las opciones de la línea de
comandos prevalecen sobre el archivo y este sobre los valores por defecto.
"""
import logging
from pathlib import Path

from .exceptions import ConfigConstraintViolation, MalformedConfigValue, UnknownConfigKey
from .models import ExperimentConfig
from .serializers import ExperimentConfigSerializer

logger = logging.getLogger(__name__)

MALFORMED_CODES = {'invalid', 'max_string_length', 'null', 'blank', 'required'}


def parse_pairs(lines, source='<texto>'):
    """Líneas ``clave = valor``; ignora vacías y comentarios con ``#``."""
    values = {}
    for number, raw in enumerate(lines, start=1):
        line = raw.split('#', 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition('=')
        if not sep or not key.strip():
            raise MalformedConfigValue(f"{source}:{number}: se esperaba 'clave=valor', se leyó {raw.strip()!r}.")
        values[key.strip()] = value.strip()
    return values


def read_config_file(path):
    path = Path(path)
    if not path.exists():
        raise MalformedConfigValue(f"No existe el archivo de configuración {path}.")
    return parse_pairs(path.read_text(encoding='utf-8').splitlines(), source=str(path))


def _raise_for_errors(errors):
    for field, details in errors.items():
        for detail in details:
            message = f"{field}: {detail}" if field != 'non_field_errors' else str(detail)
            if field != 'non_field_errors' and getattr(detail, 'code', None) in MALFORMED_CODES:
                raise MalformedConfigValue(message)
            raise ConfigConstraintViolation(message)


def parse_config(path=None, overrides=None, mode=None):
    """
    Construye un ``ExperimentConfig`` validado. ``overrides`` son pares ya
    separados (por ejemplo los de ``--set`` o ``--tolerance``).
    """
    data = read_config_file(path) if path else {}
    data.update({k: v for k, v in (overrides or {}).items() if v is not None})
    if mode is not None:
        data['mode'] = mode

    serializer = ExperimentConfigSerializer(data=data)
    unknown = sorted(set(data) - set(serializer.fields))
    if unknown:
        raise UnknownConfigKey(f"Claves desconocidas: {', '.join(unknown)}.")
    if not serializer.is_valid():
        _raise_for_errors(serializer.errors)
    config = ExperimentConfig(**serializer.validated_data)
    logger.debug(f"Configuración validada: {config}")
    return config
