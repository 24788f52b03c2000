from .models import (
    BoostedTreesClassifier,
    RandomForestClassifier,
    SoftmaxRegression,
    cross_entropy,
    fit_gbdt,
    fit_logistic,
    fit_random_forest,
    predict_proba,
    softmax,
    softmax_loss_grad,
)
from .tools import (
    ImportanceReport,
    SoftVotingEnsemble,
    balance_classes,
    ensemble_predict,
    feature_importance,
    grid_search,
)
from .tree import LEAF, Tree, build_gini_tree, build_tree, grow_tree

__all__ = [
    "BoostedTreesClassifier", "RandomForestClassifier", "SoftmaxRegression", "SoftVotingEnsemble",
    "ImportanceReport", "Tree", "LEAF", "balance_classes", "build_gini_tree", "build_tree",
    "cross_entropy", "ensemble_predict", "feature_importance", "fit_gbdt", "fit_logistic",
    "fit_random_forest", "grid_search", "grow_tree", "predict_proba", "softmax", "softmax_loss_grad",
]
