"""One-vs-all sentence classifier over binary n-gram tf-idf features."""
from .ensemble import (
    ClassifierEnsemble,
    load_ensemble,
    predict,
    save_ensemble,
    train_ensemble,
)
from .evaluation import EvalReport, cross_validate
from .features import VectorizerModel, fit_vectorizer, tokenize, vectorize
from .linear import (
    BalanceConfig,
    BinaryClassModel,
    TrainingConfig,
    modified_huber_dloss,
    modified_huber_loss,
    train_binary,
)
from .sampling import balance

__all__ = [
    "BalanceConfig", "BinaryClassModel", "ClassifierEnsemble", "EvalReport", "TrainingConfig",
    "VectorizerModel", "balance", "cross_validate", "fit_vectorizer", "load_ensemble",
    "modified_huber_dloss", "modified_huber_loss", "predict", "save_ensemble", "tokenize",
    "train_binary", "train_ensemble", "vectorize",
]
