"""Viral-cascade prediction from early adopters."""

from .features import (NON_VIRAL, VIRAL, FeatureRow, as_arrays, baseline_features, baseline_rows,
                       default_radii, early_adopters, k_feature_rows, k_features, label_cascades, n_viral)
from .forest import (F1Report, Forest, ForestConfig, confusion, cross_validate, evaluate_f1, f1_score,
                     fit_forest, gini, stratified_folds, train_forest)
from .predict import (BASELINE, K_FEATURES, CorpusConfig, GridRow, ViralityConfig, compare, sweep,
                      synthetic_corpus)
