# experiments/management/base.py
import logging

from django.core.management.base import BaseCommand, CommandError

from lmi.exceptions import NumericalBreakdown
from sim.exceptions import BlowUp
from synthesis.exceptions import SynthesisFailed

from ..config import parse_config
from ..exceptions import ConfigError

logger = logging.getLogger(__name__)

EXIT_INFEASIBLE = 1
EXIT_USAGE = 2
EXIT_BREAKDOWN = 3


class ExperimentCommand(BaseCommand):
    """
    Base de los subcomandos: opciones compartidas, lectura de la
    configuración y traducción de excepciones a códigos de salida.
    """
    mode = None

    def add_arguments(self, parser):
        parser.add_argument('--config', help='Archivo clave=valor con la configuración.')
        parser.add_argument('--out', help='Directorio de salida.')
        parser.add_argument('--tolerance', help='Tolerancia de la bisección.')
        parser.add_argument('--gamma-grid', dest='gamma_grid', help="Malla de Γ 'lo:hi:n'.")
        parser.add_argument('--jobs', help='Procesos para los barridos.')
        parser.add_argument('--set', dest='assignments', action='append', default=[], metavar='CLAVE=VALOR',
                            help='Cualquier otra clave de la configuración (repetible).')

    def overrides(self, options):
        values = {key: options.get(key) for key in ('out', 'tolerance', 'gamma_grid', 'jobs')}
        for item in options.get('assignments') or []:
            key, sep, value = item.partition('=')
            if not sep:
                raise CommandError(f"--set espera CLAVE=VALOR, se recibió {item!r}.", returncode=EXIT_USAGE)
            values[key.strip()] = value.strip()
        return values

    def handle(self, *args, **options):
        try:
            config = parse_config(options.get('config'), self.overrides(options), mode=self.mode)
        except ConfigError as exc:
            raise CommandError(f"Configuración inválida: {exc}", returncode=EXIT_USAGE)
        try:
            self.run(config)
        except (NumericalBreakdown, SynthesisFailed, BlowUp) as exc:
            logger.error(f"{self.mode}: {exc}")
            raise CommandError(str(exc), returncode=EXIT_BREAKDOWN)
        except ValueError as exc:
            raise CommandError(str(exc), returncode=EXIT_USAGE)

    def run(self, config):
        raise NotImplementedError
