"""
Pruebas para el costo conjunto de consistencia temporal.
"""
import numpy as np
import pytest

from app.errors import DimensionMismatch
from app.models.joint_cost import eval_joint, grad_y, grad_z
from tests.conftest import build_clip_problem, central_differences


def direct_joint(z, y, p, nu):
    """Triple suma explícita sobre clips, tracklets y pasos de tiempo."""
    total = 0.0
    for n, clip in enumerate(p.clips):
        z_n = z[p.z_slice(n)]
        y_n = y[p.y_slice(n)]
        for i, tr in enumerate(clip.tracklets):
            for t in range(clip.horizon):
                total += y_n[i, 0] * z_n[t] * max(tr.time - t, 0)
                total += y_n[i, 1] * z_n[t] * max(t - tr.time, 0)
    return nu / p.T * total


class TestJointCost:
    """
    Pruebas del valor y los gradientes del costo conjunto.
    """

    def test_consistent_labeling_costs_zero(self):
        """
        Verificar que estado 1 antes y estado 2 después de la acción no cuesta nada.
        """
        p = build_clip_problem([[(0, 0), (4, 4)]], horizons=[5])
        z = np.eye(5)[2]
        y = np.array([[1.0, 0.0], [0.0, 1.0]])
        assert eval_joint(z, y, p, 1.0) == 0.0

    def test_inconsistent_labeling(self):
        """
        Verificar el valor con los estados invertidos: (1/5)(2 + 2).
        """
        p = build_clip_problem([[(0, 0), (4, 4)]], horizons=[5])
        z = np.eye(5)[2]
        y = np.array([[0.0, 1.0], [1.0, 0.0]])
        assert eval_joint(z, y, p, 1.0) == pytest.approx(0.8)
        assert eval_joint(z, y, p, 2.5) == pytest.approx(2.0)

    def test_matches_direct_sum(self, rng, small_problem):
        """
        Verificar contra la triple suma en puntos fraccionarios.
        """
        for _ in range(10):
            z = rng.random(small_problem.T)
            y = rng.random((small_problem.M, 2))
            assert eval_joint(z, y, small_problem, 0.7) == pytest.approx(direct_joint(z, y, small_problem, 0.7))

    def test_bilinear_identities(self, rng, small_problem):
        """
        Verificar que el valor coincide con ambos gradientes parciales.
        """
        z = rng.random(small_problem.T)
        y = rng.random((small_problem.M, 2))
        valor = eval_joint(z, y, small_problem, 1.3)
        assert float(np.sum(grad_y(z, small_problem, 1.3) * y)) == pytest.approx(valor)
        assert float(grad_z(y, small_problem, 1.3) @ z) == pytest.approx(valor)

    def test_gradients_finite_differences(self, rng, small_problem):
        """
        Verificar ambos gradientes contra diferencias finitas centrales.
        """
        z = rng.random(small_problem.T)
        y = rng.random((small_problem.M, 2))
        num_z = central_differences(lambda x: eval_joint(x, y, small_problem, 1.0), z)
        num_y = central_differences(lambda x: eval_joint(z, x, small_problem, 1.0), y)
        np.testing.assert_allclose(grad_z(y, small_problem, 1.0), num_z, atol=1e-7)
        np.testing.assert_allclose(grad_y(z, small_problem, 1.0), num_y, atol=1e-7)

    def test_non_negative_on_vertices(self, small_problem):
        """
        Verificar que el costo es no negativo para Z y Y binarios.
        """
        y = np.zeros((small_problem.M, 2))
        y[::2, 0] = 1.0
        y[1::2, 1] = 1.0
        for t in range(small_problem.T):
            assert eval_joint(np.eye(small_problem.T)[t], y, small_problem, 1.0) >= 0.0

    def test_zero_weight(self, rng, small_problem):
        """
        Verificar que con ν = 0 el costo y los gradientes se anulan.
        """
        z = rng.random(small_problem.T)
        y = rng.random((small_problem.M, 2))
        assert eval_joint(z, y, small_problem, 0.0) == 0.0
        assert not np.any(grad_y(z, small_problem, 0.0))

    def test_shape_errors(self, small_problem):
        """
        Verificar que formas incorrectas lanzan DimensionMismatch.
        """
        with pytest.raises(DimensionMismatch):
            eval_joint(np.zeros(3), np.zeros((small_problem.M, 2)), small_problem, 1.0)
        with pytest.raises(DimensionMismatch):
            grad_z(np.zeros((small_problem.M, 3)), small_problem, 1.0)
