"""Adversarial risk of linear classifiers: samplers, exact attacks, risks, training."""
from .attack import AttackResult, UnsupportedBudget, attack_constrained, attack_oracle, attack_unconstrained
from .model import (Dataset, GaussianMixture, LinearClassifier, PerturbationBudget, SquaresDistribution2D,
                    bayes_classifier, iter_chunks, read_csv, sample, sample_mixture, sample_squares,
                    squares_bayes_classifier, write_csv)
from .numerics import NormKind, dual_norm, logistic_loss, norm, normal_cdf, sign, zero_one_loss
from .risk import (Loss, RiskName, RiskReport, UnsupportedRisk, cf_excess_adv_risk, cf_new_adv_risk_bound, cf_offsupport_flip,
                   cf_standard_risk, cf_worst_case_adv_risk, check_reg_bounds, mc_many, mc_risk)
from .train import GaussianInit, TrainConfig, TrainingDiverged, TrainResult, train, train_standard

__version__ = "0.1.0"
