"""
Fixtures de regresión: cada archivo JSON guarda una receta, sus entradas y la
salida esperada. ``verify_fixtures`` vuelve a ejecutar cada receta y compara.
"""
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple, Union

import numpy as np
from loguru import logger

from app.config import FIXTURES_DIR
from app.errors import FixtureMismatch, SolverError
from app.models.core_model import (
    Assignment,
    ClipSpec,
    ConstraintMode,
    ProblemInstance,
    SolverConfig,
    TrackletLabel,
    TrackletSpec,
    build_problem,
    labeling_feasibility,
)
from app.models.evaluation import GroundTruth, action_precision, state_precision
from app.models.frank_wolfe import exact_line_search, solve
from app.models.joint_cost import eval_joint
from app.models.oracles import END, brute_force_tracklet_lp, build_successor_table, solve_saliency_lp, solve_tracklet_lp

FLOAT_TOLERANCE = 1e-12

RECIPES: Dict[str, Callable[[Dict[str, Any]], Any]] = {}


def recipe(name: str):
    def registrar(funcion):
        RECIPES[name] = funcion
        return funcion
    return registrar


def _single_clip(inputs: Dict[str, Any]) -> ProblemInstance:
    intervalos = inputs["tracklets"]
    horizon = inputs.get("horizon", max(end for _, end in intervalos) + 1)
    spec = ClipSpec("fixture", horizon, tuple(TrackletSpec(b, e) for b, e in intervalos))
    return build_problem([spec], np.zeros((horizon, 1)), np.zeros((len(intervalos), 1)))


def _succ_names(indices) -> List[Union[int, str]]:
    return ["F" if j == END else j for j in indices]


@recipe("successor_table")
def _successor_table(inputs):
    tabla = build_successor_table(_single_clip(inputs).clips[0])
    return {"start": _succ_names(tabla.start), "successors": [_succ_names(s) for s in tabla.successors]}


@recipe("tracklet_dp")
def _tracklet_dp(inputs):
    clip = _single_clip(inputs).clips[0]
    y, valor = solve_tracklet_lp(np.array(inputs["costs"]), clip, build_successor_table(clip), ConstraintMode(inputs["mode"]))
    return {"y": y.astype(int).tolist(), "value": valor}


@recipe("brute_force")
def _brute_force(inputs):
    clip = _single_clip(inputs).clips[0]
    y, valor = brute_force_tracklet_lp(np.array(inputs["costs"]), clip, ConstraintMode(inputs["mode"]))
    return {"y": y.astype(int).tolist(), "value": valor}


@recipe("feasibility")
def _feasibility(inputs):
    clip = _single_clip(inputs).clips[0]
    return {"feasible": labeling_feasibility(np.array(inputs["labels"]), clip, ConstraintMode(inputs["mode"])).tolist()}


@recipe("saliency_lp")
def _saliency_lp(inputs):
    ventana = inputs.get("window")
    z, valor = solve_saliency_lp(np.array(inputs["costs"], dtype=float), None if ventana is None else tuple(ventana))
    return {"t": int(np.argmax(z)), "value": valor}


@recipe("line_search")
def _line_search(inputs):
    return {"gamma": exact_line_search(inputs["f0"], inputs["f_half"], inputs["f1"])}


@recipe("joint_cost")
def _joint_cost(inputs):
    p = _single_clip(inputs)
    return {"value": eval_joint(np.array(inputs["z"], dtype=float), np.array(inputs["y"], dtype=float), p, inputs["nu"])}


@recipe("precision")
def _precision(inputs):
    clips = inputs["clips"]
    gt = GroundTruth(
        clip_ids=tuple(c["id"] for c in clips),
        horizons=tuple(c["horizon"] for c in clips),
        action_intervals=tuple(tuple(c["gt_action"]) for c in clips),
        labels=tuple(tuple(TrackletLabel(label) for label in c["labels"]) for c in clips),
    )
    z = np.concatenate([np.eye(c["horizon"])[c["predicted_t"]] for c in clips])
    y = np.array([fila for c in clips for fila in c["predicted_y"]], dtype=float)
    asignacion = Assignment(z, y, integral=True)
    return {
        "state_precision": state_precision(asignacion, gt),
        "state_precision_micro": state_precision(asignacion, gt, micro=True),
        "action_precision": action_precision(asignacion, gt),
    }


@recipe("solve")
def _solve(inputs):
    p = _single_clip(inputs)
    report = solve(p, SolverConfig(nu=inputs["nu"], solver_mode=inputs["mode"], threads=1))
    return {
        "trace": [[r.phase, r.iteration, r.objective, r.gap] for r in report.trace],
        "relaxed_objective": report.relaxed_objective,
        "best_integer_objective": report.best_integer_objective,
        "best_t": report.best_integer.action_times(p)[0],
        "best_y": report.best_integer.y.astype(int).tolist(),
    }


def compare(expected: Any, actual: Any, path: str = "") -> Optional[str]:
    """Primera diferencia entre dos estructuras JSON (None si coinciden)."""
    if isinstance(expected, bool) or isinstance(actual, bool):
        return None if expected is actual else f"{path or '/'}: {expected!r} != {actual!r}"
    if isinstance(expected, (int, float)) and isinstance(actual, (int, float)):
        if isinstance(expected, int) and isinstance(actual, int):
            return None if expected == actual else f"{path or '/'}: {expected} != {actual}"
        escala = max(1.0, abs(float(expected)))
        if abs(float(expected) - float(actual)) <= FLOAT_TOLERANCE * escala:
            return None
        return f"{path or '/'}: {expected!r} != {actual!r}"
    if isinstance(expected, dict) and isinstance(actual, dict):
        if set(expected) != set(actual):
            return f"{path or '/'}: claves {sorted(expected)} != {sorted(actual)}"
        for clave in expected:
            diferencia = compare(expected[clave], actual[clave], f"{path}/{clave}")
            if diferencia:
                return diferencia
        return None
    if isinstance(expected, list) and isinstance(actual, list):
        if len(expected) != len(actual):
            return f"{path or '/'}: longitud {len(expected)} != {len(actual)}"
        for i, (e, a) in enumerate(zip(expected, actual)):
            diferencia = compare(e, a, f"{path}/{i}")
            if diferencia:
                return diferencia
        return None
    return None if expected == actual else f"{path or '/'}: {expected!r} != {actual!r}"


@dataclass
class FixtureReport:
    passed: List[str] = field(default_factory=list)
    failures: List[Tuple[str, str]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures

    def raise_for_failures(self):
        if self.failures:
            raise FixtureMismatch(self.failures)


def run_fixture(document: Dict[str, Any]) -> Any:
    receta = RECIPES.get(document["recipe"])
    if receta is None:
        raise KeyError(f"receta desconocida '{document['recipe']}'")
    return json.loads(json.dumps(receta(document["inputs"])))


def verify_fixtures(directory: Union[str, Path] = FIXTURES_DIR) -> FixtureReport:
    """
    Regenerar cada fixture del directorio y compararlo con la salida guardada.

    Un archivo ilegible o con una receta desconocida cuenta como fallo con el
    nombre del archivo.
    """
    report = FixtureReport()
    archivos = sorted(Path(directory).glob("*.json"))
    if not archivos:
        logger.warning(f"No hay fixtures en {directory}")
    for archivo in archivos:
        nombre = archivo.stem
        try:
            documento = json.loads(archivo.read_text(encoding="utf-8"))
            nombre = documento.get("name", nombre)
            obtenido = run_fixture(documento)
            diferencia = compare(documento["expected"], obtenido)
        except (ValueError, KeyError, TypeError, AttributeError, SolverError) as e:
            diferencia = f"no se pudo ejecutar: {e}"
        if diferencia:
            logger.error(f"Fixture {nombre}: {diferencia}")
            report.failures.append((nombre, diferencia))
        else:
            logger.debug(f"Fixture {nombre}: ok")
            report.passed.append(nombre)
    logger.info(f"Fixtures: {len(report.passed)} correctos, {len(report.failures)} con diferencias")
    return report
