"""
Pruebas para la tabla comparativa de variantes.
"""
import numpy as np
import pytest

from app.errors import ValidationError
from app.models.benchmark import (
    CORE_VARIANTS,
    RESULT_COLUMNS,
    VARIANTS,
    gt_action_features,
    gt_state_features,
    run_benchmark,
    run_variant,
)
from app.models.core_model import SolverConfig
from app.models.evaluation import GroundTruth
from app.models.synth import ScenarioSpec, generate


@pytest.fixture
def quick_config():
    return SolverConfig(max_iters=30, convex_max_iters=30, rounding_cadence=5)


class TestBenchmarkTable:
    """
    Pruebas del esquema y el determinismo de la tabla.
    """

    def test_core_schema(self, tiny_scenario, quick_config):
        """
        Verificar una fila por variante principal, en orden, con las columnas fijas.
        """
        problem, gt = tiny_scenario
        tabla = run_benchmark(problem, gt, quick_config, chance_samples=20)
        assert list(tabla.columns) == RESULT_COLUMNS
        assert list(tabla["variant"]) == [
            "chance", "kmeans", "constraints-only", "exactly-one", "at-least-one", "joint", "joint+scores",
        ]
        assert tabla["seconds"].isna().all()
        precisiones = tabla["state_precision"]
        assert ((precisiones >= 0) & (precisiones <= 1)).all()

    def test_metrics_not_applicable_are_nan(self, tiny_scenario, quick_config):
        """
        Verificar NaN en las métricas que una variante no reporta.
        """
        problem, gt = tiny_scenario
        tabla = run_benchmark(problem, gt, quick_config, chance_samples=20).set_index("variant")
        assert np.isnan(tabla.loc["kmeans", "action_precision"])
        assert np.isnan(tabla.loc["at-least-one", "action_precision"])
        assert np.isnan(tabla.loc["chance", "integer_objective"])
        assert not np.isnan(tabla.loc["joint", "action_precision"])
        assert not np.isnan(tabla.loc["joint", "integer_objective"])

    def test_deterministic(self, tiny_scenario, quick_config):
        """
        Verificar que dos corridas y distintos números de hilos dan la misma tabla.
        """
        problem, gt = tiny_scenario
        variantes = [VARIANTS["joint"], VARIANTS["exactly-one"], VARIANTS["chance"]]
        a = run_benchmark(problem, gt, quick_config, variantes, chance_samples=10)
        b = run_benchmark(problem, gt, quick_config.with_overrides(threads=4), variantes, chance_samples=10)
        assert a.equals(b)

    def test_timings_fill_seconds(self, tiny_scenario, quick_config):
        """
        Verificar que con tiempos la columna seconds queda poblada.
        """
        problem, gt = tiny_scenario
        fila = run_variant(VARIANTS["at-least-one"], problem, gt, quick_config, timings=True)
        assert fila["seconds"] >= 0.0

    def test_extended_variants(self, tiny_scenario, quick_config):
        """
        Verificar que las variantes extendidas corren y reportan lo que corresponde.
        """
        problem, gt = tiny_scenario
        for nombre in ["action-only", "action-only+object-cues"]:
            fila = run_variant(VARIANTS[nombre], problem, gt, quick_config)
            assert np.isnan(fila["state_precision"])
            assert 0.0 <= fila["action_precision"] <= 1.0
        fila = run_variant(VARIANTS["joint+gt-state-features"], problem, gt, quick_config)
        assert 0.0 <= fila["state_precision"] <= 1.0


class TestGroundTruthFeatures:
    """
    Pruebas de las características construidas desde la verdad de terreno.
    """

    def test_action_indicator(self, tiny_scenario):
        """
        Verificar que la columna indicadora marca exactamente los intervalos de acción.
        """
        problem, gt = tiny_scenario
        columna = gt_action_features(problem, gt)
        assert columna.shape == (problem.T, 1)
        esperado = sum(fin - inicio + 1 for inicio, fin in gt.action_intervals)
        assert columna.sum() == esperado

    def test_state_one_hot(self, tiny_scenario):
        """
        Verificar un one-hot por tracklet.
        """
        problem, gt = tiny_scenario
        x = gt_state_features(problem, gt)
        assert x.shape == (problem.M, 4)
        np.testing.assert_array_equal(x.sum(axis=1), np.ones(problem.M))

    def test_requires_truth(self, tiny_scenario):
        """
        Verificar el error cuando faltan los intervalos de acción.
        """
        problem, gt = tiny_scenario
        incompleta = GroundTruth(gt.clip_ids, gt.horizons, tuple(None for _ in gt.clip_ids), gt.labels)
        with pytest.raises(ValidationError):
            gt_action_features(problem, incompleta)


@pytest.mark.slow
class TestSyntheticRecovery:
    """
    Reproducción direccional de la comparación de variantes en el escenario por defecto.
    """

    @pytest.fixture(scope="class")
    def default_table(self):
        problem, gt = generate(ScenarioSpec())
        variantes = list(CORE_VARIANTS) + [VARIANTS["action-only"]]
        return run_benchmark(problem, gt, SolverConfig(), variantes).set_index("variant")

    def test_joint_recovers_states_and_actions(self, default_table):
        """
        Verificar precisión conjunta de estados y de acción de al menos 0.9.
        """
        assert default_table.loc["joint", "state_precision"] >= 0.90
        assert default_table.loc["joint", "action_precision"] >= 0.90

    def test_joint_beats_action_only(self, default_table):
        """
        Verificar que las pistas de estado corrigen las acciones distractoras.
        """
        diferencia = default_table.loc["joint", "action_precision"] - default_table.loc["action-only", "action_precision"]
        assert diferencia >= 0.15

    def test_at_least_one_not_worse_than_exactly_one(self, default_table):
        """
        Verificar que la restricción de al menos uno no pierde frente a exactamente uno.
        """
        assert default_table.loc["at-least-one", "state_precision"] >= default_table.loc["exactly-one", "state_precision"]

    def test_kmeans_below_joint(self, default_table):
        """
        Verificar que k-means queda por debajo del solucionador conjunto.
        """
        assert default_table.loc["kmeans", "state_precision"] < default_table.loc["joint", "state_precision"]

    def test_scores_help_with_many_false_positives(self):
        """
        Verificar que con fp_rate = 0.6 los puntajes de detección no empeoran la precisión de estados.
        """
        problem, gt = generate(ScenarioSpec(fp_rate=0.6))
        tabla = run_benchmark(problem, gt, SolverConfig(), [VARIANTS["joint"], VARIANTS["joint+scores"]])
        tabla = tabla.set_index("variant")
        assert tabla.loc["joint+scores", "state_precision"] >= tabla.loc["joint", "state_precision"]
