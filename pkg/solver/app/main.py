"""
Punto de entrada de la CLI del solucionador conjunto de acciones y estados de objetos.

Uso:
    python -m app.main generate --out problem.json
    python -m app.main solve --problem problem.json --mode joint --out report.json
    python -m app.main round --problem problem.json --report report.json --out assign.json
    python -m app.main eval --problem problem.json --assign assign.json --out results.csv
    python -m app.main bench --all-variants --out table.csv
    python -m app.main fixtures
"""
import argparse
import sys
from typing import List, Optional

from loguru import logger

from app.api import commands
from app.config import DEFAULT_THREADS, LOG_FILE, LOG_LEVEL
from app.errors import InfeasibleClip, SolverError

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INFEASIBLE = 2


def configure_logging(level: str = LOG_LEVEL):
    """Un sink a stderr y, si LOG_FILE está definido, un archivo rotado."""
    logger.remove()
    logger.add(sys.stderr, level=level.upper())
    if LOG_FILE:
        logger.add(LOG_FILE, rotation="10 MB", level=level.upper(), enqueue=True)


def _common(parser: argparse.ArgumentParser):
    parser.add_argument("--seed", type=int, default=None, help="Semilla de toda la aleatoriedad")
    parser.add_argument("--threads", type=int, default=DEFAULT_THREADS,
                        help="Hilos para el trabajo por clip (no cambia los resultados)")
    parser.add_argument("--log-level", default=LOG_LEVEL, help="Nivel de logging (DEBUG, INFO, WARNING, ...)")
    parser.add_argument("--timings", action="store_true",
                        help="Incluir tiempos de pared en las salidas (las vuelve no deterministas)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="solver",
        description="Descubrimiento conjunto de acciones y estados de objetos en clips de video",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="Generar una instancia sintética")
    p.add_argument("--spec", help="ScenarioSpec en JSON (por defecto, el escenario base)")
    p.add_argument("--out", required=True)
    _common(p)
    p.set_defaults(handler=commands.cmd_generate)

    p = sub.add_parser("solve", help="Resolver la relajación y redondear")
    p.add_argument("--problem", required=True)
    p.add_argument("--config", help="SolverConfig en JSON; las banderas tienen prioridad")
    p.add_argument("--mode", choices=commands.SOLVER_MODES, default=None)
    p.add_argument("--out", required=True)
    _common(p)
    p.set_defaults(handler=commands.cmd_solve)

    p = sub.add_parser("round", help="Redondear el iterado relajado de un reporte")
    p.add_argument("--problem", required=True)
    p.add_argument("--report", required=True)
    p.add_argument("--variant", default=None, help="Nombre de variante a registrar en la asignación")
    p.add_argument("--out", required=True)
    _common(p)
    p.set_defaults(handler=commands.cmd_round)

    p = sub.add_parser("eval", help="Evaluar una asignación contra la verdad de terreno")
    p.add_argument("--problem", required=True)
    p.add_argument("--assign", required=True)
    p.add_argument("--out", required=True)
    _common(p)
    p.set_defaults(handler=commands.cmd_eval)

    p = sub.add_parser("bench", help="Tabla comparativa de variantes")
    fuente = p.add_mutually_exclusive_group()
    fuente.add_argument("--spec", help="ScenarioSpec en JSON para generar la instancia")
    fuente.add_argument("--problem", help="Problema con verdad de terreno")
    p.add_argument("--config", help="SolverConfig base en JSON")
    p.add_argument("--all-variants", action="store_true", help="Las siete variantes principales")
    p.add_argument("--extended", action="store_true",
                   help="Con --all-variants, agrega solo acción, pistas de objeto y características verdaderas")
    p.add_argument("--variant", action="append", help="Variante a ejecutar (repetible)")
    p.add_argument("--progress", action="store_true", help="Barra de progreso en stderr")
    p.add_argument("--out", required=True)
    _common(p)
    p.set_defaults(handler=commands.cmd_bench)

    p = sub.add_parser("fixtures", help="Verificar los fixtures de regresión")
    p.add_argument("--dir", default=None, help="Directorio de fixtures")
    _common(p)
    p.set_defaults(handler=commands.cmd_fixtures)

    return parser


def run_cli(argv: Optional[List[str]] = None) -> int:
    """Ejecutar la CLI y devolver el código de salida (0 éxito, 1 error, 2 clip infactible)."""
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level)
    if args.threads < 1:
        print("error: --threads debe ser >= 1", file=sys.stderr)
        return EXIT_ERROR
    try:
        return args.handler(args)
    except InfeasibleClip as e:
        logger.error(str(e))
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except SolverError as e:
        logger.error(str(e))
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR
    except Exception as e:
        logger.exception(f"Error no manejado: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR


def main():
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
