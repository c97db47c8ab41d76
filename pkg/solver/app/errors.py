"""
Jerarquía de excepciones del solucionador.

Cada error lleva un mensaje de una línea pensado para mostrarse tal cual en la CLI.
"""
from typing import Optional


class SolverError(Exception):
    """Error base de la biblioteca."""


class ValidationError(SolverError):
    """Entrada inválida o invariante del modelo violado."""


class DimensionMismatch(ValidationError):
    """Las dimensiones de un arreglo no coinciden con el problema."""


class ParseError(ValidationError):
    """El archivo no es JSON válido."""


class SchemaError(ValidationError):
    """El documento JSON no respeta el esquema esperado."""


class InfeasibleClip(SolverError):
    """Ningún etiquetado entero satisface las restricciones de un clip."""

    def __init__(self, clip_id: Optional[str], detail: str = ""):
        self.clip_id = clip_id
        mensaje = f"clip '{clip_id}' sin etiquetado factible" if clip_id is not None else "clip sin etiquetado factible"
        if detail:
            mensaje = f"{mensaje}: {detail}"
        super().__init__(mensaje)


class InstanceTooLarge(SolverError):
    """La enumeración exhaustiva excede el tamaño permitido."""


class NonFiniteObjective(SolverError):
    """Valor no finito en el objetivo o en la búsqueda lineal."""


class ScenarioError(SolverError):
    """El generador sintético agotó sus reintentos."""


class FixtureMismatch(SolverError):
    """Uno o más fixtures regenerados no coinciden con los guardados."""

    def __init__(self, failures):
        self.failures = list(failures)
        nombres = ", ".join(name for name, _ in self.failures)
        super().__init__(f"fixtures con diferencias: {nombres}")
