"""Scaling-limit laboratory for continuous-time branching processes started
from a large initial population."""

from .offspring import (BirthDeath, Custom, CustomInfo, Geometric,
                        GeneralizedNeveu, LogSupercritical, LuriaDelbruck,
                        MomentProfile, NeveuHarmonic, OffspringSpec, Poisson,
                        ProcessParams, SibuyaOffspring, StableCritical,
                        TailConstants, Verdict, check_non_explosion,
                        extinction_probability, moment_profile, pgf_eval,
                        sample_offspring, slowly_varying_L, spec_from_json,
                        spec_to_json, tail_constants)
from .pgf import (SolverConfig, conditional_pgf_G, csbp_residual, evaluate_F,
                  local_alpha, transfer_residual)
from .limits import (CsbpProfile, ExplosiveProfile, GaussianLimitProfile,
                     StableOUProfile, c_profile, explosive_profile,
                     gaussian_covariance, mean_and_variance, normalizer_an,
                     stable_profile)
from .simulate import (Ensemble, PathSample, ScaledEnsemble, SimConfig,
                       rescale, sample_explosion_time, simulate_ensemble,
                       simulate_path)
from .stable import (empirical_laplace, sample_gaussian, sample_one_sided,
                     sample_spectrally_positive)
from .harness import (ExperimentConfig, ExplosionStudyConfig, KsResult,
                      Report, covariance_error, ks_one_sample, ks_two_sample,
                      run_experiment, run_explosion_study)
from .streams import CounterStream

__version__ = "0.1.0"
