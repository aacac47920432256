"""Synthetic tasks, agents and recovery studies."""
from .envs import Bandit, DecisionProblemSet, RLWMTask, TwoStep
from .generators import (RecoveryConfig, RecoveryEntry, RecoveryReport, binomial_ci,
                         decision_attribution, gen_bandit_agents, gen_decision_problems,
                         gen_rlwm_agents, gen_twostep_agents, identify_model, noise_sweep,
                         recovery_study, sample_params, simulate_heuristic_agents, ttb_priority)

__all__ = ["Bandit", "DecisionProblemSet", "RLWMTask", "TwoStep", "RecoveryConfig",
           "RecoveryEntry", "RecoveryReport", "binomial_ci", "decision_attribution",
           "gen_bandit_agents", "gen_decision_problems", "gen_rlwm_agents", "gen_twostep_agents",
           "identify_model", "noise_sweep", "recovery_study", "sample_params",
           "simulate_heuristic_agents", "ttb_priority"]
