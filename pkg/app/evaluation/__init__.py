from .metrics import vqa_accuracy
from .evaluator import evaluate, evaluate_predictions, predict_answers, summarize

__all__ = [
    "vqa_accuracy",
    "evaluate",
    "evaluate_predictions",
    "predict_answers",
    "summarize",
]
