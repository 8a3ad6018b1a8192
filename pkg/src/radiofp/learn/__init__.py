"""Car/truck classifiers: k-NN, decision tree, linear SVM and a small ANN."""
from .dataset import CLASSES, Dataset, Representation, Standardizer, decode_label, encode_labels, stratified_folds
from .evaluate import EvalReport, confusion_matrix, cross_validate, per_link_eval
from .models import Family, ModelSpec, TrainedModel, gradient_check, load_model, predict, save_model, train

__all__ = [
    "CLASSES",
    "Dataset",
    "EvalReport",
    "Family",
    "ModelSpec",
    "Representation",
    "Standardizer",
    "TrainedModel",
    "confusion_matrix",
    "cross_validate",
    "decode_label",
    "encode_labels",
    "gradient_check",
    "load_model",
    "per_link_eval",
    "predict",
    "save_model",
    "stratified_folds",
    "train",
]
