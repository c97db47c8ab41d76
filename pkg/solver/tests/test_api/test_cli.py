"""
Pruebas de extremo a extremo de la línea de comandos.
"""
import json

import numpy as np
import pytest

from app.api.storage import load_assignment, load_problem, load_results, save_problem
from app.main import EXIT_ERROR, EXIT_INFEASIBLE, EXIT_OK, run_cli
from app.models.benchmark import RESULT_COLUMNS
from tests.conftest import build_clip_problem

SMALL_SCENARIO = {"n_clips": 3, "horizon_range": [12, 14], "tracklets_range": [4, 5], "d_v": 6, "d_s": 6}
QUICK_CONFIG = {"max_iters": 30, "convex_max_iters": 30, "rounding_cadence": 5}


@pytest.fixture
def workdir(tmp_path):
    (tmp_path / "spec.json").write_text(json.dumps(SMALL_SCENARIO))
    (tmp_path / "cfg.json").write_text(json.dumps(QUICK_CONFIG))
    return tmp_path


def run(*args):
    return run_cli([str(a) for a in args] + ["--log-level", "WARNING"])


class TestPipeline:
    """
    Pruebas del flujo generate -> solve -> round -> eval.
    """

    def test_generate_solve_round_eval(self, workdir):
        """
        Verificar que el flujo completo termina con código 0 y produce una fila de resultados.
        """
        problema = workdir / "problem.json"
        reporte = workdir / "report.json"
        asignacion = workdir / "assign.json"
        resultados = workdir / "results.csv"

        assert run("generate", "--spec", workdir / "spec.json", "--seed", 4, "--out", problema) == EXIT_OK
        assert run("solve", "--problem", problema, "--config", workdir / "cfg.json", "--mode", "joint",
                   "--out", reporte) == EXIT_OK
        assert run("round", "--problem", problema, "--report", reporte, "--variant", "joint",
                   "--out", asignacion) == EXIT_OK
        assert run("eval", "--problem", problema, "--assign", asignacion, "--out", resultados) == EXIT_OK

        problem, _ = load_problem(problema)
        a, doc = load_assignment(asignacion)
        assert a.z.shape == (problem.T,)
        assert doc.mode == "joint"
        tabla = load_results(resultados)
        assert list(tabla.columns) == RESULT_COLUMNS
        assert tabla.loc[0, "variant"] == "joint"
        assert 0.0 <= tabla.loc[0, "state_precision"] <= 1.0
        assert np.isnan(tabla.loc[0, "seconds"])

    def test_generate_is_deterministic(self, workdir):
        """
        Verificar que la misma semilla produce archivos idénticos.
        """
        for nombre in ("a.json", "b.json"):
            assert run("generate", "--spec", workdir / "spec.json", "--seed", 2, "--out", workdir / nombre) == EXIT_OK
        assert (workdir / "a.json").read_bytes() == (workdir / "b.json").read_bytes()

    def test_solve_reports_are_deterministic(self, workdir):
        """
        Verificar que dos resoluciones idénticas escriben el mismo reporte.
        """
        problema = workdir / "problem.json"
        assert run("generate", "--spec", workdir / "spec.json", "--out", problema) == EXIT_OK
        for nombre in ("r1.json", "r2.json"):
            assert run("solve", "--problem", problema, "--config", workdir / "cfg.json", "--threads", 2,
                       "--out", workdir / nombre) == EXIT_OK
        assert (workdir / "r1.json").read_bytes() == (workdir / "r2.json").read_bytes()


class TestExitCodes:
    """
    Pruebas de los códigos de salida y los mensajes de error.
    """

    def test_infeasible_clip_exit_two(self, workdir, capsys):
        """
        Verificar que un clip con un solo tracklet termina con código 2 y lo nombra.
        """
        problema = workdir / "infactible.json"
        save_problem(build_clip_problem([[(0, 0), (2, 2)], [(1, 1)]], rng=np.random.default_rng(0)), problema)
        codigo = run("solve", "--problem", problema, "--out", workdir / "report.json")
        assert codigo == EXIT_INFEASIBLE
        assert "c1" in capsys.readouterr().err
        assert not (workdir / "report.json").exists()

    def test_invalid_problem_exit_one(self, workdir, capsys):
        """
        Verificar que un archivo inválido termina con código 1.
        """
        problema = workdir / "roto.json"
        problema.write_text("no es json")
        assert run("solve", "--problem", problema, "--out", workdir / "report.json") == EXIT_ERROR
        assert "error:" in capsys.readouterr().err

    def test_unknown_variant(self, workdir):
        """
        Verificar que una variante desconocida es un error de validación.
        """
        codigo = run("bench", "--spec", workdir / "spec.json", "--variant", "magia", "--out", workdir / "t.csv")
        assert codigo == EXIT_ERROR

    def test_eval_without_truth(self, workdir):
        """
        Verificar que evaluar sin verdad de terreno es un error.
        """
        problema = workdir / "sin_gt.json"
        save_problem(build_clip_problem([[(0, 0), (2, 2)]], rng=np.random.default_rng(0)), problema)
        asignacion = workdir / "assign.json"
        asignacion.write_text(json.dumps({"mode": "joint", "z": [0, 1, 0], "y": [[1, 0], [0, 1]]}))
        assert run("eval", "--problem", problema, "--assign", asignacion, "--out", workdir / "r.csv") == EXIT_ERROR

    def test_fixtures_pass(self):
        """
        Verificar que los fixtures versionados pasan desde la CLI.
        """
        assert run("fixtures") == EXIT_OK


class TestBench:
    """
    Pruebas del subcomando bench.
    """

    def test_all_variants_schema(self, workdir):
        """
        Verificar una fila por variante principal.
        """
        salida = workdir / "table.csv"
        codigo = run("bench", "--spec", workdir / "spec.json", "--config", workdir / "cfg.json",
                     "--all-variants", "--out", salida)
        assert codigo == EXIT_OK
        tabla = load_results(salida)
        assert list(tabla.columns) == RESULT_COLUMNS
        assert list(tabla["variant"]) == [
            "chance", "kmeans", "constraints-only", "exactly-one", "at-least-one", "joint", "joint+scores",
        ]

    def test_byte_identical_across_threads(self, workdir):
        """
        Verificar que la tabla es idéntica entre corridas con 1 y 4 hilos.
        """
        salidas = []
        for hilos in (1, 4):
            salida = workdir / f"table_{hilos}.csv"
            codigo = run("bench", "--spec", workdir / "spec.json", "--config", workdir / "cfg.json",
                         "--variant", "joint", "--variant", "exactly-one", "--threads", hilos, "--seed", 1,
                         "--out", salida)
            assert codigo == EXIT_OK
            salidas.append(salida.read_bytes())
        assert salidas[0] == salidas[1]
