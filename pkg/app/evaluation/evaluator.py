"""
Évaluation de bout en bout: décodage glouton, correction floue, précision VQA
"""
import math
from typing import List, Optional, Sequence, Tuple

import torch

from app.core.config import settings
from app.core.exceptions import SchemaError
from app.core.logging import get_logger
from app.evaluation.metrics import vqa_accuracy
from app.inputs.builder import build_finetune_sample
from app.inputs.collate import collate
from app.inputs.tokenizer import Vocabulary
from app.models.results import EvalRecord, EvalSummary
from app.models.sample import SceneSample
from app.modeling.model import SceneTextSeq2Seq
from app.postprocess.fuzzy import CandidatePool, correct_answer
from app.utils.sanitizers import canonicalize

logger = get_logger(__name__)


def _check_annotations(samples: Sequence[SceneSample]) -> None:
    for sample in samples:
        if sample.question is None or sample.answers is None:
            raise SchemaError(f"Question ou réponses absentes: {sample.image_id}")


def summarize(records: Sequence[EvalRecord]) -> EvalSummary:
    """Moyennes stables (fsum) sur les enregistrements triés par image_id"""
    ordered = sorted(records, key=lambda r: r.image_id)
    n = len(ordered)
    if n == 0:
        return EvalSummary(n=0, acc_raw=0.0, acc_corrected=0.0)
    return EvalSummary(
        n=n,
        acc_raw=math.fsum(r.accuracy_raw for r in ordered) / n,
        acc_corrected=math.fsum(r.accuracy for r in ordered) / n
    )


def evaluate_predictions(
        samples: Sequence[SceneSample],
        predictions: Sequence[str],
        postprocess: bool = True,
        threshold: Optional[int] = None,
        max_ngram: Optional[int] = None
) -> Tuple[EvalSummary, List[EvalRecord]]:
    """
    Noter des réponses prédites (alignées sur samples)

    Returns:
        Tuple (résumé, enregistrements triés par image_id)

    Raises:
        SchemaError: Annotations absentes ou prédictions non alignées
    """
    _check_annotations(samples)
    if len(predictions) != len(samples):
        raise SchemaError(f"{len(predictions)} prédictions pour {len(samples)} échantillons")

    records = []
    for sample, predicted in zip(samples, predictions):
        predicted = canonicalize(predicted)
        corrected = predicted
        if postprocess:
            pool = CandidatePool.from_regions(sample.scene_tokens, max_ngram)
            corrected = correct_answer(predicted, pool, threshold).corrected
        records.append(EvalRecord(
            image_id=sample.image_id,
            question=sample.question,
            predicted=predicted,
            corrected=corrected,
            accuracy=vqa_accuracy(corrected, sample.answers),
            accuracy_raw=vqa_accuracy(predicted, sample.answers)
        ))

    records.sort(key=lambda r: r.image_id)
    return summarize(records), records


def predict_answers(
        samples: Sequence[SceneSample],
        model: SceneTextSeq2Seq,
        vocab: Vocabulary,
        max_len: Optional[int] = None,
        batch_size: Optional[int] = None
) -> List[str]:
    """Décodage glouton d'une réponse par échantillon (ordre conservé)"""
    max_len = max_len or settings.decode_max_len
    batch_size = batch_size or settings.eval_batch_size
    model.eval()

    answers: List[str] = []
    with torch.no_grad():
        for start in range(0, len(samples), batch_size):
            rows = [
                build_finetune_sample(s, vocab, model.config.max_dec_len)
                for s in samples[start:start + batch_size]
            ]
            batch = collate(rows)
            encoder_states = model.encode(batch)
            decoded = model.greedy_decode(encoder_states, batch.attention_mask, max_len)
            answers.extend(vocab.decode(ids) for ids in decoded)
    return answers


def evaluate(
        samples: Sequence[SceneSample],
        model: SceneTextSeq2Seq,
        vocab: Vocabulary,
        postprocess: bool = True,
        threshold: Optional[int] = None,
        max_ngram: Optional[int] = None,
        max_len: Optional[int] = None,
        batch_size: Optional[int] = None
) -> Tuple[EvalSummary, List[EvalRecord]]:
    """
    Évaluer un modèle sur un dataset annoté

    Args:
        samples: Échantillons avec question et 10 réponses
        model: Modèle entraîné
        vocab: Vocabulaire du checkpoint
        postprocess: Appliquer la correction floue
        threshold: Seuil de correction (défaut: settings)
        max_ngram: Longueur des n-grammes du pool (défaut: settings)
        max_len: Longueur maximale de décodage (défaut: settings)
        batch_size: Taille des batches d'inférence (défaut: settings)

    Returns:
        Tuple (résumé, enregistrements)
    """
    _check_annotations(samples)
    predictions = predict_answers(samples, model, vocab, max_len, batch_size)
    summary, records = evaluate_predictions(samples, predictions, postprocess, threshold, max_ngram)
    logger.info(
        "Évaluation terminée",
        extra={"n": summary.n, "acc_raw": summary.acc_raw, "acc_corrected": summary.acc_corrected}
    )
    return summary, records
