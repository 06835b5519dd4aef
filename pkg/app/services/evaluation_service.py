from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from app.core.exceptions import CheckpointError, SchemaError
from app.dataset.validation import parse_box
from app.evaluation.evaluator import evaluate
from app.models.results import EvalSummary
from app.modeling.checkpoint import load_checkpoint
from app.postprocess.fuzzy import CandidatePool, correct_answer
from app.services.base import BaseService
from app.services.dataset_service import dataset_service
from app.utils.formatters import JsonlFormatter
from app.utils.helpers import timeit


def records_path_for(summary_path: Union[str, Path]) -> Path:
    """Fichier JSONL par échantillon voisin du résumé"""
    path = Path(summary_path)
    return path.with_name(f"{path.stem}.records.jsonl")


def _scene_texts(record: Dict[str, Any], index: int) -> List[str]:
    """
    Textes des scene tokens en ordre de lecture

    Si chaque token est une région avec une boîte, l'ordre est recalculé par
    (y1, x1); des textes nus sont pris dans l'ordre donné.
    """
    tokens = record.get("scene_tokens")
    if not isinstance(tokens, list):
        raise SchemaError(f"Ligne {index}: scene_tokens doit être une liste")
    texts, boxes = [], []
    for token in tokens:
        text = token.get("text") if isinstance(token, dict) else token
        if not isinstance(text, str):
            raise SchemaError(f"Ligne {index}: scene token non textuel")
        texts.append(text)
        boxes.append(token.get("box") if isinstance(token, dict) else None)

    if texts and all(box is not None for box in boxes):
        keys = [parse_box(box, f"Ligne {index}") for box in boxes]
        order = sorted(range(len(texts)), key=lambda i: (keys[i].y1, keys[i].x1))
        texts = [texts[i] for i in order]
    return texts


class EvaluationService(BaseService):
    """Service pour l'évaluation et la correction floue hors ligne"""

    @timeit
    def evaluate(
            self,
            data_path: Union[str, Path],
            checkpoint_path: Union[str, Path],
            out: Union[str, Path],
            postprocess: bool = True,
            threshold: Optional[int] = None,
            max_ngram: Optional[int] = None
    ) -> EvalSummary:
        """
        Évaluer un checkpoint sur un dataset annoté

        Écrit le résumé JSON {n, acc_raw, acc_corrected} dans out et les
        enregistrements par échantillon dans <out>.records.jsonl.
        """
        checkpoint = load_checkpoint(checkpoint_path)
        if checkpoint.vocab is None:
            raise CheckpointError(f"Le checkpoint {checkpoint_path} ne contient pas de vocabulaire")
        bundle = dataset_service.load(data_path)

        summary, records = evaluate(
            bundle.samples,
            checkpoint.model,
            checkpoint.vocab,
            postprocess=postprocess,
            threshold=threshold,
            max_ngram=max_ngram
        )

        out = Path(out)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(JsonlFormatter.to_json(summary.model_dump(mode="json"), indent=2) + "\n", encoding="utf-8")
        JsonlFormatter.write_jsonl(records_path_for(out), (r.to_record() for r in records))
        self.logger.info(f"Résumé d'évaluation écrit: {out}", extra=summary.model_dump(mode="json"))
        return summary

    @timeit
    def correct(
            self,
            in_path: Union[str, Path],
            out_path: Union[str, Path],
            threshold: Optional[int] = None,
            max_ngram: Optional[int] = None
    ) -> int:
        """
        Corriger des réponses JSONL {image_id, answer, scene_tokens}

        Les scene tokens avec boîtes sont remis en ordre de lecture, les
        textes nus gardent l'ordre donné.

        Returns:
            Nombre de réponses corrigées (applied=True)
        """
        results = []
        applied = 0
        for index, record in enumerate(JsonlFormatter.iter_jsonl(in_path)):
            answer = record.get("answer")
            if not isinstance(answer, str):
                raise SchemaError(f"Ligne {index}: answer doit être une chaîne")
            pool = CandidatePool.from_texts(_scene_texts(record, index), max_ngram)
            result = correct_answer(answer, pool, threshold)
            applied += int(result.applied)
            results.append({"image_id": record.get("image_id"), **result.model_dump(mode="json")})

        JsonlFormatter.write_jsonl(out_path, results)
        self.logger.info(
            f"{applied}/{len(results)} réponses corrigées",
            extra={"n_records": len(results), "n_applied": applied}
        )
        return applied


evaluation_service = EvaluationService()
