"""Privacy-aware decoding with Renyi-DP accounting on a toy RAG pipeline.

The package splits into the mechanism proper (logits, mechanism,
accounting), a desk-scale retrieval-augmented generation testbed (corpus,
retrieval, lm, generation), leakage metrics (metrics), and the experiment
harness plus CLI (experiment, cli).
"""

from .accounting import (DEFAULT_ALPHA_GRID, AccountantLedger, PrivacyReport,
                         StepRecord)
from .corpus import Corpus, make_toy_corpus, synth_background, tokenize
from .experiment import (ExperimentConfig, ResultRow, build_config,
                         emit_reports, run_experiment, sample_prompts)
from .generation import (COMMAND_TOKENS, ExtractionPrompt, GenerationTrace,
                         IdentityDecoder, PadDecoder, generate)
from .lm import CopyProneLM
from .logits import margin, normalized_entropy, softmax
from .mechanism import (MODES, PadConfig, StepDecision, base_sigma, calibrate,
                        pad_step, screen, sensitivity)
from .metrics import (MetricThresholds, RunCounts, aggregate, lcs_length,
                      perplexity, repeat_hit, rouge_l)
from .retrieval import RetrievalResult, TfidfIndex, build_index

__version__ = "0.1.0"

__all__ = [
    "AccountantLedger",
    "COMMAND_TOKENS",
    "CopyProneLM",
    "Corpus",
    "DEFAULT_ALPHA_GRID",
    "ExperimentConfig",
    "ExtractionPrompt",
    "GenerationTrace",
    "IdentityDecoder",
    "MODES",
    "MetricThresholds",
    "PadConfig",
    "PadDecoder",
    "PrivacyReport",
    "ResultRow",
    "RetrievalResult",
    "RunCounts",
    "StepDecision",
    "StepRecord",
    "TfidfIndex",
    "aggregate",
    "base_sigma",
    "build_config",
    "build_index",
    "calibrate",
    "emit_reports",
    "generate",
    "lcs_length",
    "make_toy_corpus",
    "margin",
    "normalized_entropy",
    "pad_step",
    "perplexity",
    "repeat_hit",
    "rouge_l",
    "run_experiment",
    "sample_prompts",
    "screen",
    "sensitivity",
    "softmax",
    "synth_background",
    "tokenize",
    "__version__",
]
