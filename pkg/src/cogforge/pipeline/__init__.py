"""Guided generation of model programs with a proposal engine in the loop."""
from .ablate import AblationRow, AblationTable, ablate
from .archive import write_archive
from .engines import (HTTPEngine, MockEngine, PRESET_TEMPERATURES, ProposalEngine, ScriptedEngine,
                      prompt_hash, propose)
from .extract import Candidate, canonical_name, canonical_set, extract_candidates
from .feedback import FEEDBACK_HEADER, construct_feedback
from .mocks import LadderEngine, learning_script
from .prompt import ABLATABLE, COMPONENTS, PromptSpec, build_prompt, default_spec, guardrails
from .run import CandidateLog, IterationLog, RunConfig, RunResult, audit_prompts, run

__all__ = ["AblationRow", "AblationTable", "ablate", "write_archive", "HTTPEngine", "MockEngine",
           "PRESET_TEMPERATURES", "ProposalEngine", "ScriptedEngine", "prompt_hash", "propose",
           "Candidate", "canonical_name", "canonical_set", "extract_candidates",
           "FEEDBACK_HEADER", "construct_feedback", "LadderEngine", "learning_script", "ABLATABLE", "COMPONENTS",
           "PromptSpec", "build_prompt", "default_spec", "guardrails", "CandidateLog",
           "IterationLog", "RunConfig", "RunResult", "audit_prompts", "run"]
