"""
Pruebas para el generador sintético.
"""
import numpy as np
import pydantic
import pytest

from app.errors import ScenarioError
from app.models.core_model import ConstraintMode, TrackletLabel, is_feasible_integer, validate_problem
from app.models.joint_cost import eval_joint
from app.models.synth import ScenarioSpec, generate


class TestScenarioSpec:
    """
    Pruebas de validación de los parámetros del escenario.
    """

    def test_defaults(self):
        """
        Verificar los valores por defecto del escenario base.
        """
        spec = ScenarioSpec()
        assert spec.n_clips == 20
        assert spec.horizon_range == (18, 24)
        assert spec.seed == 0

    def test_invalid_range(self):
        """
        Verificar que un rango invertido se rechaza.
        """
        with pytest.raises(pydantic.ValidationError):
            ScenarioSpec(horizon_range=(10, 5))

    def test_fp_clusters_need_dimensions(self):
        """
        Verificar que d_s debe dejar un eje por grupo de falsos positivos.
        """
        with pytest.raises(pydantic.ValidationError):
            ScenarioSpec(d_s=3, n_fp_clusters=2)

    def test_unknown_field(self):
        """
        Verificar que los campos desconocidos se rechazan.
        """
        with pytest.raises(pydantic.ValidationError):
            ScenarioSpec(n_videos=3)


class TestGenerate:
    """
    Pruebas de las instancias generadas.
    """

    def test_deterministic(self):
        """
        Verificar que la misma semilla produce la misma instancia.
        """
        spec = ScenarioSpec(n_clips=4, seed=9)
        p1, gt1 = generate(spec)
        p2, gt2 = generate(spec)
        np.testing.assert_array_equal(p1.video_features, p2.video_features)
        np.testing.assert_array_equal(p1.tracklet_features, p2.tracklet_features)
        assert p1.clips == p2.clips
        assert gt1 == gt2

    def test_seed_changes_instance(self):
        """
        Verificar que otra semilla produce otra instancia.
        """
        p1, _ = generate(ScenarioSpec(n_clips=3, seed=1))
        p2, _ = generate(ScenarioSpec(n_clips=3, seed=2))
        assert p1.T != p2.T or not np.array_equal(p1.video_features, p2.video_features)

    def test_structure(self, default_scenario):
        """
        Verificar identificadores, rangos de tamaño y posición de la acción.
        """
        problem, gt = default_scenario
        spec = ScenarioSpec()
        assert [clip.clip_id for clip in problem.clips] == [f"clip_{n:03d}" for n in range(20)]
        for clip in problem.clips:
            assert spec.horizon_range[0] <= clip.horizon <= spec.horizon_range[1]
            assert spec.tracklets_range[0] <= clip.n_tracklets <= spec.tracklets_range[1]
            inicio, fin = clip.gt_action_interval
            margen = clip.horizon // 3
            assert margen <= inicio and fin <= clip.horizon - margen - 1
            assert spec.action_length[0] <= fin - inicio + 1 <= spec.action_length[1]
            n_fp = sum(tr.gt_label == TrackletLabel.FALSE_POSITIVE for tr in clip.tracklets)
            assert n_fp == min(round(spec.fp_rate * clip.n_tracklets), clip.n_tracklets - 2)
        assert gt.has_actions and gt.has_labels
        assert all(d.ok for d in validate_problem(problem))

    def test_true_tracklets_respect_action(self, default_scenario):
        """
        Verificar que estado 1 precede a la acción, estado 2 la sigue y los ambiguos la rodean.
        """
        problem, _ = default_scenario
        banda = ScenarioSpec().ambiguous_band
        for clip in problem.clips:
            inicio, fin = clip.gt_action_interval
            for tr in clip.tracklets:
                if tr.gt_label == TrackletLabel.FALSE_POSITIVE:
                    continue
                assert tr.begin == tr.end
                assert not (inicio <= tr.time <= fin)
                if tr.gt_label == TrackletLabel.STATE1:
                    assert tr.time < inicio - banda
                elif tr.gt_label == TrackletLabel.STATE2:
                    assert tr.time > fin + banda
                else:
                    assert inicio - banda <= tr.time <= fin + banda

    def test_planted_assignment_feasible_and_consistent(self, default_scenario):
        """
        Verificar que la asignación plantada es factible y no paga costo conjunto.
        """
        problem, gt = default_scenario
        plantada = gt.planted_assignment()
        for n, clip in enumerate(problem.clips):
            assert is_feasible_integer(plantada.y_block(problem, n), clip, ConstraintMode.AT_LEAST_ONE)
        assert eval_joint(plantada.z, plantada.y, problem, 1.0) == 0.0

    def test_noiseless_features_are_means(self):
        """
        Verificar que sin ruido cada tracklet verdadero vale exactamente la media de su estado.
        """
        spec = ScenarioSpec(n_clips=3, noise_sigma=0.0, ambiguous_band=0)
        problem, _ = generate(spec)
        fila = 0
        for clip in problem.clips:
            for tr in clip.tracklets:
                x = problem.tracklet_features[fila]
                if tr.gt_label == TrackletLabel.STATE1:
                    np.testing.assert_array_equal(x, np.eye(spec.d_s)[0] * spec.cluster_separation)
                elif tr.gt_label == TrackletLabel.STATE2:
                    np.testing.assert_array_equal(x, np.eye(spec.d_s)[1] * spec.cluster_separation)
                fila += 1

    def test_nearest_mean_accuracy(self, default_scenario):
        """
        Verificar que la media más cercana clasifica bien los tracklets de estado (sin ambiguos).
        """
        problem, _ = default_scenario
        spec = ScenarioSpec()
        medias = np.stack([np.eye(spec.d_s)[0], np.eye(spec.d_s)[1]]) * spec.cluster_separation
        etiquetas = [tr.gt_label for clip in problem.clips for tr in clip.tracklets]
        mascara = np.array([label in (TrackletLabel.STATE1, TrackletLabel.STATE2) for label in etiquetas])
        x = problem.tracklet_features[mascara]
        esperado = np.array([0 if label == TrackletLabel.STATE1 else 1
                             for label, m in zip(etiquetas, mascara) if m])
        distancias = ((x[:, None, :] - medias[None, :, :]) ** 2).sum(axis=2)
        assert np.mean(np.argmin(distancias, axis=1) == esperado) > 0.95

    def test_hostile_scenario(self):
        """
        Verificar que un escenario sin espacio para la acción agota los reintentos.
        """
        spec = ScenarioSpec(n_clips=1, horizon_range=(3, 3), action_length=(2, 2), max_retries=5)
        with pytest.raises(ScenarioError, match="clip_000"):
            generate(spec)
