import argparse
import sys
from typing import List, Optional

from app.core.config import settings
from app.core.exceptions import EXIT_OK, EXIT_RUNTIME, BaseAppException, UsageError
from app.core.logging import get_logger, setup_logging
from app.models.enums import Split, Stage
from app.services.dataset_service import dataset_service
from app.services.evaluation_service import evaluation_service
from app.services.training_service import training_service
from app.utils.formatters import JsonlFormatter

logger = get_logger(__name__)


class CLIArgumentParser(argparse.ArgumentParser):
    """ArgumentParser dont les erreurs deviennent des UsageError (code 1)"""

    def error(self, message: str):
        self.print_help(sys.stderr)
        raise UsageError(f"{self.prog}: {message}")


def _threshold(value: str) -> int:
    try:
        threshold = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"entier attendu: {value!r}")
    if not 0 <= threshold <= 100:
        raise argparse.ArgumentTypeError(f"doit être dans [0, 100]: {threshold}")
    return threshold


def _positive(value: str) -> int:
    try:
        number = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"entier attendu: {value!r}")
    if number < 1:
        raise argparse.ArgumentTypeError(f"doit être ≥ 1: {number}")
    return number


# ============================================
# HANDLERS
# ============================================

def _synth(args: argparse.Namespace) -> int:
    dataset_service.synthesize(args.seed, args.n, args.out, Split(args.split), args.config)
    return EXIT_OK


def _stats(args: argparse.Namespace) -> int:
    stats = dataset_service.stats(args.data)
    print("\n".join(stats.report_lines()))
    return EXIT_OK


def _train(stage: Stage):
    def handler(args: argparse.Namespace) -> int:
        training_service.train(
            stage,
            args.data,
            args.out,
            config_path=args.config,
            init_path=getattr(args, "init", None),
            resume_path=args.resume,
            metrics_path=args.metrics
        )
        return EXIT_OK
    return handler


def _evaluate(args: argparse.Namespace) -> int:
    summary = evaluation_service.evaluate(
        args.data,
        args.checkpoint,
        args.out,
        postprocess=not args.no_postprocess,
        threshold=args.threshold,
        max_ngram=args.max_ngram
    )
    print(JsonlFormatter.to_json(summary.model_dump(mode="json")))
    return EXIT_OK


def _correct(args: argparse.Namespace) -> int:
    evaluation_service.correct(args.input, args.out, args.threshold, args.max_ngram)
    return EXIT_OK


# ============================================
# PARSER
# ============================================

def build_parser() -> CLIArgumentParser:
    """Parser avec un sous-parser par sous-commande"""
    parser = CLIArgumentParser(prog=settings.app_name, description=settings.app_description)
    parser.add_argument("--log-level", choices=["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"])
    parser.add_argument("--version", action="version", version=f"%(prog)s {settings.app_version}")
    commands = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    synth = commands.add_parser("synth", help="Générer un dataset synthétique")
    synth.add_argument("--seed", type=int, required=True)
    synth.add_argument("--n", type=_positive, required=True, help="Nombre d'échantillons")
    synth.add_argument("--out", required=True, help="Fichier JSONL de sortie")
    synth.add_argument("--split", choices=[s.value for s in Split], default=Split.PRETRAIN.value)
    synth.add_argument("--config", help="Configuration JSON/TOML du générateur")
    synth.set_defaults(handler=_synth)

    stats = commands.add_parser("stats", help="Statistiques d'un dataset")
    stats.add_argument("data", help="Fichier JSONL")
    stats.set_defaults(handler=_stats)

    for stage in Stage:
        train = commands.add_parser(stage.value.lower(), help=f"Entraînement {stage.value}")
        train.add_argument("--data", required=True, help="Dataset JSONL de l'étape")
        train.add_argument("--out", default=str(settings.checkpoint_dir), help="Répertoire des checkpoints")
        train.add_argument("--config", help="Fichier de run JSON/TOML (tables model, train, adv)")
        train.add_argument("--resume", help="Reprendre depuis un checkpoint")
        train.add_argument("--metrics", help="JSONL des métriques par step")
        if stage is Stage.FINETUNE:
            train.add_argument("--init", help="Checkpoint pré-entraîné d'initialisation")
        train.set_defaults(handler=_train(stage))

    evaluate = commands.add_parser("evaluate", help="Évaluer un checkpoint")
    evaluate.add_argument("--data", required=True, help="Dataset annoté")
    evaluate.add_argument("--checkpoint", required=True)
    evaluate.add_argument("--out", required=True, help="Résumé JSON (+ .records.jsonl)")
    evaluate.add_argument("--no-postprocess", action="store_true", help="Désactiver la correction floue")
    evaluate.add_argument("--threshold", type=_threshold, default=None)
    evaluate.add_argument("--max-ngram", type=_positive, default=None)
    evaluate.set_defaults(handler=_evaluate)

    correct = commands.add_parser("correct", help="Corriger des réponses JSONL")
    correct.add_argument("--in", dest="input", required=True, help="JSONL {image_id, answer, scene_tokens}")
    correct.add_argument("--out", required=True)
    correct.add_argument("--threshold", type=_threshold, default=None)
    correct.add_argument("--max-ngram", type=_positive, default=None)
    correct.set_defaults(handler=_correct)

    return parser


# ============================================
# ENTRY POINT
# ============================================

def cli(argv: Optional[List[str]] = None) -> int:
    """
    Point d'entrée du CLI

    Returns:
        0 en cas de succès, 1 pour une erreur d'utilisation,
        2 pour une erreur de données ou d'exécution
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        print(e.detail, file=sys.stderr)
        return e.exit_code
    except SystemExit as e:
        # --help, --version
        return e.code if isinstance(e.code, int) else EXIT_OK

    setup_logging(args.log_level)
    options = {k: v for k, v in vars(args).items() if k != "handler"}
    logger.info(
        f"{settings.app_name} {args.command}",
        extra={"config": {"settings": settings.get_config_dict(), "arguments": options}}
    )

    try:
        return args.handler(args)
    except BaseAppException as e:
        logger.error(e.detail, extra={"error": e.to_dict()})
        print(f"{e.error_code}: {e.detail}", file=sys.stderr)
        return e.exit_code
    except OSError as e:
        logger.error(f"Erreur d'entrée/sortie: {e}")
        print(f"IO_ERROR: {e}", file=sys.stderr)
        return EXIT_RUNTIME


def run() -> None:
    sys.exit(cli())


if __name__ == "__main__":
    run()
