# experiments/serializers.py
from django.conf import settings
from rest_framework import serializers

from lmi.search import parse_gamma_grid
from sim.nonlinearities import NONLINEARITY_CHOICES, SHIFTED_SIN
from synthesis import catalog
from synthesis.exceptions import AssumptionViolated
from synthesis.models import PUBLISHED, SOURCE_CHOICES
from synthesis.services import build_reduced_model, minimal_controller_dimension

from .models import INITIAL_CONDITION_CHOICES, MODE_CHOICES, PARABOLA_PROFILE, REPRODUCE_TABLES

# código de error de las reglas que cruzan varios campos
CONSTRAINT = 'constraint'


class ExperimentConfigSerializer(serializers.Serializer):
    """
    Valida una configuración de experimento. Los valores por defecto son los
    del ejemplo numérico de referencia.
    """
    mode = serializers.ChoiceField(choices=MODE_CHOICES, default=REPRODUCE_TABLES)
    delta = serializers.FloatField(default=catalog.DELTA)
    N0 = serializers.IntegerField(min_value=0, default=catalog.N0)
    N = serializers.IntegerField(min_value=1, default=catalog.SIM_N)
    x_star = serializers.FloatField(min_value=0, max_value=1, default=catalog.X_STAR)
    sigma = serializers.FloatField(min_value=0, default=catalog.SIM_SIGMA)
    M = serializers.IntegerField(min_value=1, default=catalog.SIM_M)
    r = serializers.FloatField(min_value=0, default=catalog.SIM_DELAY)
    gamma_grid = serializers.CharField(default=lambda: settings.LMI_GAMMA_GRID)
    tolerance = serializers.FloatField(default=lambda: settings.LMI_BISECTION_TOL)
    gains = serializers.ChoiceField(choices=SOURCE_CHOICES, default=PUBLISHED)
    nonlinearity = serializers.ChoiceField(choices=NONLINEARITY_CHOICES, default=SHIFTED_SIN)
    initial_condition = serializers.ChoiceField(choices=INITIAL_CONDITION_CHOICES, default=PARABOLA_PROFILE)
    Nx = serializers.IntegerField(min_value=2, default=lambda: settings.SPECTRAL_GRID_INTERVALS)
    # 0 = paso automático
    dt = serializers.FloatField(min_value=0, default=0.0)
    T_final = serializers.FloatField(default=lambda: settings.SIM_T_FINAL)
    # 0 = una muestra cada 0.01 unidades de tiempo
    snapshot_stride = serializers.IntegerField(min_value=0, default=0)
    snapshots = serializers.BooleanField(default=False)
    out = serializers.CharField(default=lambda: str(settings.EXPERIMENTS_OUTPUT_DIR))
    jobs = serializers.IntegerField(min_value=1, default=lambda: settings.EXPERIMENTS_JOBS)
    seed = serializers.IntegerField(default=0)

    def _positive(self, value, name):
        if value <= 0:
            raise serializers.ValidationError(f"{name} debe ser positivo.", code='min_value')
        return value

    def validate_delta(self, value):
        return self._positive(value, 'δ')

    def validate_tolerance(self, value):
        return self._positive(value, 'La tolerancia')

    def validate_T_final(self, value):
        return self._positive(value, 'El horizonte')

    def validate_gamma_grid(self, value):
        try:
            parse_gamma_grid(value)
        except ValueError as exc:
            raise serializers.ValidationError(str(exc), code='invalid')
        return value

    def validate(self, attrs):
        N0, N = attrs['N0'], attrs['N']
        if N < N0:
            raise serializers.ValidationError(f"Se requiere N ≥ N0 (N={N}, N0={N0}).", code=CONSTRAINT)
        needed = minimal_controller_dimension(attrs['sigma'], attrs['delta'])
        if N0 < needed:
            raise serializers.ValidationError(
                f"Con σ={attrs['sigma']} y δ={attrs['delta']} se requiere N0 ≥ {needed}.", code=CONSTRAINT
            )
        try:
            build_reduced_model(N0, N, attrs['x_star'], delayed=attrs['r'] > 0)
        except AssumptionViolated as exc:
            raise serializers.ValidationError(str(exc), code=CONSTRAINT)
        if attrs['gains'] == PUBLISHED and (N0 != catalog.N0 or attrs['x_star'] != catalog.X_STAR):
            raise serializers.ValidationError(
                "Las ganancias publicadas solo aplican a N0=0 y x*=0; use gains=designed.", code=CONSTRAINT
            )
        return attrs
