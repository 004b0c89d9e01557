"""End-to-end extraction experiments: rows, sweeps, and report files.

An experiment is described by a flat key=value config (CONFIG_SCHEMA lists
the keys). Running it produces one ResultRow per (mode, sweep point) plus an
identity-decoder "extraction" baseline row, each carrying leakage counts and
a privacy report composed over every generation in the row.

Determinism contract: the corpus (when synthesized), the prompt set, and all
noise draws derive from the master seed. Per-generation bit streams are
seeded from (master seed, row index, prompt index), so rows could run in any
order or in parallel without changing a single byte of output.

Report files, all UTF-8 and newline-terminated:

* results.csv, the machine-readable source of truth, fixed column order;
* results.md, a presentational table shaped like the usual attack/defense
  comparison (Retrieved Contexts, Repeat Prompts, ... PPL, epsilon, gamma);
* privacy.jsonl, one privacy report object per row;
* config.txt, the fully resolved configuration echo.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field, fields as dataclass_fields
from pathlib import Path

import numpy as np

from .accounting import AccountantLedger, PrivacyReport
from .corpus import Corpus, make_toy_corpus, synth_background
from .generation import (COMMAND_TOKENS, ExtractionPrompt, GenerationTrace,
                         IdentityDecoder, PadDecoder, generate)
from .lm import CopyProneLM
from .mechanism import MODES, PadConfig
from .metrics import MetricThresholds, RunCounts, aggregate
from .retrieval import build_index

__all__ = [
    "CONFIG_SCHEMA",
    "SWEEP_FIELDS",
    "ExperimentConfig",
    "ResultRow",
    "parse_config_text",
    "build_config",
    "config_items",
    "load_corpus",
    "sample_prompts",
    "run_experiment",
    "emit_reports",
    "render_markdown",
    "read_results_csv",
]

LOG = logging.getLogger("pad.experiment")

# Tokens taken from the front of a sampled document as the prompt's
# information segment.
INFORMATION_TOKENS = 5

# Label of the identity-decoder baseline row.
EXTRACTION_LABEL = "extraction"

_PAD_FLOAT_FIELDS = tuple(
    f.name for f in dataclass_fields(PadConfig) if f.name != "mode")

# Fields a sweep may range over: any numeric mechanism knob, or the
# generation length (the composition-analysis axis).
SWEEP_FIELDS = _PAD_FLOAT_FIELDS + ("max_len",)

# Flat config keys -> (value kind, help text). Kinds drive both the file
# parser and the generated CLI flags. Empty string means "unset" for the
# optional keys.
CONFIG_SCHEMA = {
    "corpus_path": ("str", "corpus file (one document per line) or directory of .txt files; empty uses the built-in synthetic corpus"),
    "prompt_count": ("int", "number of extraction prompts"),
    "max_len": ("int", "tokens generated per prompt"),
    "seed": ("int", "master seed, unsigned 64-bit"),
    "modes": ("str", "comma-separated decoding modes to run (full, static, no_calibration, no_sensitivity, no_screening)"),
    "sweep": ("str", "single-field grid, e.g. lambda_amp=1,3,5,10; empty for none"),
    "retrieval.k": ("int", "documents retrieved per prompt"),
    "retrieval.max_distance": ("optfloat", "retrieval distance gate; empty disables"),
    "model.copy_bonus": ("float", "logit bonus on the copy-pointer token"),
    "thresholds.repeat_min_tokens": ("int", "verbatim-repeat run length"),
    "thresholds.rouge_threshold": ("float", "ROUGE-L hit threshold in (0, 1]"),
    "thresholds.rouge_beta": ("float", "ROUGE-L F-measure beta"),
    "pad.eps_base": ("float", "per-step budget scale"),
    "pad.eps_min": ("float", "budget floor"),
    "pad.alpha": ("float", "Renyi order for the fixed-order report"),
    "pad.delta": ("float", "target delta"),
    "pad.lambda_amp": ("float", "noise amplification factor"),
    "pad.delta_min": ("float", "sensitivity clamp floor"),
    "pad.sigma_min": ("float", "noise floor"),
    "pad.tau_conf": ("float", "screening max-probability threshold"),
    "pad.tau_margin": ("float", "screening margin threshold"),
    "pad.w_entropy": ("float", "calibration entropy weight"),
    "pad.w_pos": ("float", "calibration position weight"),
    "pad.w_conf": ("float", "calibration confidence weight"),
}

CSV_COLUMNS = (
    "row", "mode", "sweep_field", "sweep_value",
    "retrieved_contexts", "repeat_prompts", "repeat_contexts",
    "rouge_prompts", "rouge_contexts", "mean_ppl", "ppl_excluded",
    "epsilon", "delta", "alpha_star", "gamma",
    "protected_steps", "total_steps",
    "alpha_config", "epsilon_at_config_alpha",
)


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated experiment description."""

    corpus_path: str | None = None
    prompt_count: int = 250
    max_len: int = 64
    seed: int = 0
    modes: tuple[str, ...] = ("full",)
    sweep_field: str | None = None
    sweep_values: tuple[float, ...] = ()
    retrieval_k: int = 3
    retrieval_max_distance: float | None = None
    copy_bonus: float = 4.0
    pad: PadConfig = field(default_factory=PadConfig)
    thresholds: MetricThresholds = field(default_factory=MetricThresholds)

    def __post_init__(self) -> None:
        if self.prompt_count < 1:
            raise ValueError("prompt_count must be >= 1")
        if self.max_len < 1:
            raise ValueError("max_len must be >= 1")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must fit in an unsigned 64-bit integer")
        if not self.modes:
            raise ValueError("modes must be non-empty")
        for mode in self.modes:
            if mode not in MODES:
                raise ValueError(f"unknown mode {mode!r}; choose from {MODES}")
        if len(set(self.modes)) != len(self.modes):
            raise ValueError("modes must be distinct")
        if (self.sweep_field is None) != (len(self.sweep_values) == 0):
            raise ValueError("sweep_field and sweep_values must be set together")
        if self.sweep_field is not None:
            if self.sweep_field not in SWEEP_FIELDS:
                raise ValueError(
                    f"sweep field {self.sweep_field!r} not sweepable; choose from {SWEEP_FIELDS}")
            for v in self.sweep_values:
                if not math.isfinite(v):
                    raise ValueError("sweep values must be finite")
                if self.sweep_field == "max_len" and (v != int(v) or v < 1):
                    raise ValueError("max_len sweep values must be positive integers")
        if self.retrieval_k < 1:
            raise ValueError("retrieval k must be >= 1")
        if self.retrieval_max_distance is not None and self.retrieval_max_distance < 0:
            raise ValueError("retrieval max_distance must be non-negative")
        if not (math.isfinite(self.copy_bonus) and self.copy_bonus >= 0):
            raise ValueError("copy_bonus must be finite and >= 0")


@dataclass
class ResultRow:
    """One (mode, sweep point) outcome with its accounting."""

    index: int
    mode: str
    sweep_field: str | None
    sweep_value: float | None
    counts: RunCounts
    privacy: PrivacyReport
    traces: list[GenerationTrace] = field(repr=False, default_factory=list)


def parse_config_text(text: str) -> dict[str, str]:
    """Parse flat key = value lines; # starts a comment line."""
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno}: expected key = value, got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        if key in values:
            raise ValueError(f"config line {lineno}: duplicate key {key!r}")
        values[key] = value.strip()
    return values


def _parse_int(key: str, raw: str) -> int:
    try:
        return int(raw)
    except ValueError:
        raise ValueError(f"config key {key!r}: expected integer, got {raw!r}") from None


def _parse_float(key: str, raw: str) -> float:
    try:
        return float(raw)
    except ValueError:
        raise ValueError(f"config key {key!r}: expected number, got {raw!r}") from None


def _parse_sweep(raw: str) -> tuple[str | None, tuple[float, ...]]:
    if not raw:
        return None, ()
    name, sep, tail = raw.partition("=")
    if not sep or not tail.strip():
        raise ValueError(f"sweep must look like field=v1,v2,... got {raw!r}")
    values = tuple(_parse_float("sweep", part.strip())
                   for part in tail.split(",") if part.strip())
    if not values:
        raise ValueError(f"sweep grid is empty: {raw!r}")
    return name.strip(), values


def build_config(values: dict[str, str]) -> ExperimentConfig:
    """Build an ExperimentConfig from flat string values.

    Unspecified keys take their dataclass defaults; unknown keys are an
    error so typos fail loudly.
    """
    unknown = sorted(set(values) - set(CONFIG_SCHEMA))
    if unknown:
        raise ValueError(f"unknown config keys: {unknown}")

    def take(key: str) -> str | None:
        raw = values.get(key)
        return raw if raw not in (None, "") else None

    kwargs: dict = {}
    if take("corpus_path") is not None:
        kwargs["corpus_path"] = take("corpus_path")
    for key, attr in (("prompt_count", "prompt_count"), ("max_len", "max_len"),
                      ("seed", "seed"), ("retrieval.k", "retrieval_k")):
        if take(key) is not None:
            kwargs[attr] = _parse_int(key, take(key))
    if take("modes") is not None:
        kwargs["modes"] = tuple(m.strip() for m in take("modes").split(",") if m.strip())
    if take("sweep") is not None:
        kwargs["sweep_field"], kwargs["sweep_values"] = _parse_sweep(take("sweep"))
    if take("retrieval.max_distance") is not None:
        kwargs["retrieval_max_distance"] = _parse_float(
            "retrieval.max_distance", take("retrieval.max_distance"))
    if take("model.copy_bonus") is not None:
        kwargs["copy_bonus"] = _parse_float("model.copy_bonus", take("model.copy_bonus"))

    thr_kwargs: dict = {}
    if take("thresholds.repeat_min_tokens") is not None:
        thr_kwargs["repeat_min_tokens"] = _parse_int(
            "thresholds.repeat_min_tokens", take("thresholds.repeat_min_tokens"))
    for key, attr in (("thresholds.rouge_threshold", "rouge_threshold"),
                      ("thresholds.rouge_beta", "rouge_beta")):
        if take(key) is not None:
            thr_kwargs[attr] = _parse_float(key, take(key))
    kwargs["thresholds"] = MetricThresholds(**thr_kwargs)

    pad_kwargs = {}
    for name in _PAD_FLOAT_FIELDS:
        key = f"pad.{name}"
        if take(key) is not None:
            pad_kwargs[name] = _parse_float(key, take(key))
    kwargs["pad"] = PadConfig(**pad_kwargs)

    return ExperimentConfig(**kwargs)


def config_items(cfg: ExperimentConfig) -> list[tuple[str, str]]:
    """Resolved flat (key, value) pairs, one per CONFIG_SCHEMA key."""
    sweep = ""
    if cfg.sweep_field is not None:
        sweep = cfg.sweep_field + "=" + ",".join(repr(v) for v in cfg.sweep_values)
    md = cfg.retrieval_max_distance
    items = [
        ("corpus_path", cfg.corpus_path or ""),
        ("prompt_count", str(cfg.prompt_count)),
        ("max_len", str(cfg.max_len)),
        ("seed", str(cfg.seed)),
        ("modes", ",".join(cfg.modes)),
        ("sweep", sweep),
        ("retrieval.k", str(cfg.retrieval_k)),
        ("retrieval.max_distance", "" if md is None else repr(md)),
        ("model.copy_bonus", repr(cfg.copy_bonus)),
        ("thresholds.repeat_min_tokens", str(cfg.thresholds.repeat_min_tokens)),
        ("thresholds.rouge_threshold", repr(cfg.thresholds.rouge_threshold)),
        ("thresholds.rouge_beta", repr(cfg.thresholds.rouge_beta)),
    ]
    items += [(f"pad.{name}", repr(getattr(cfg.pad, name)))
              for name in _PAD_FLOAT_FIELDS]
    return items


def load_corpus(cfg: ExperimentConfig) -> Corpus:
    """Load cfg.corpus_path, or synthesize the default corpus from the seed."""
    if not cfg.corpus_path:
        return make_toy_corpus(seed=cfg.seed)
    path = Path(cfg.corpus_path)
    if path.is_dir():
        return Corpus.from_dir(path)
    if path.is_file():
        return Corpus.from_file(path)
    raise ValueError(f"corpus path does not exist: {path}")


def sample_prompts(corpus: Corpus, count: int, seed: int) -> list[ExtractionPrompt]:
    """Seed-sampled extraction prompts.

    Each prompt's information segment is the first INFORMATION_TOKENS tokens
    of a uniformly sampled document; the command segment is fixed.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = np.random.default_rng(np.random.SeedSequence((seed, 0)))
    prompts = []
    for _ in range(count):
        doc = corpus.documents[int(rng.integers(len(corpus)))]
        prompts.append(ExtractionPrompt(information=tuple(doc[:INFORMATION_TOKENS])))
    return prompts


def _row_plan(cfg: ExperimentConfig) -> list[tuple[str, str | None, float | None]]:
    plan: list[tuple[str, str | None, float | None]] = [(EXTRACTION_LABEL, None, None)]
    points: list[float | None] = [None]
    if cfg.sweep_field is not None:
        points = list(cfg.sweep_values)
    for mode in cfg.modes:
        for value in points:
            plan.append((mode, cfg.sweep_field if value is not None else None, value))
    return plan


def _pad_config_for(cfg: ExperimentConfig, mode: str,
                    sweep_field: str | None, value: float | None) -> PadConfig:
    changes: dict = {}
    if mode != EXTRACTION_LABEL:
        changes["mode"] = mode
    if sweep_field is not None and sweep_field != "max_len":
        changes[sweep_field] = value
    return cfg.pad.replace(**changes) if changes else cfg.pad


def _max_len_for(cfg: ExperimentConfig, sweep_field: str | None,
                 value: float | None) -> int:
    if sweep_field == "max_len":
        return int(value)
    return cfg.max_len


def run_experiment(cfg: ExperimentConfig, corpus: Corpus | None = None,
                   error_handler=None) -> list[ResultRow]:
    """Run every planned row and return the results in plan order.

    corpus overrides cfg.corpus_path when given. Without an error_handler a
    row failure propagates; with one, the failure is reported as
    error_handler(row_index, label, exception) and remaining rows still run.
    Row configurations are validated up front so config mistakes surface
    before any generation starts.
    """
    if corpus is None:
        corpus = load_corpus(cfg)
    plan = _row_plan(cfg)
    for mode, sweep_field, value in plan:
        _pad_config_for(cfg, mode, sweep_field, value)
        _max_len_for(cfg, sweep_field, value)

    model = CopyProneLM(cfg.copy_bonus).fit(
        synth_background(corpus.vocabulary),
        extra_tokens=corpus.vocabulary + COMMAND_TOKENS)
    index = build_index(corpus)
    prompts = sample_prompts(corpus, cfg.prompt_count, cfg.seed)
    retrievals = [index.retrieve(list(p.tokens), cfg.retrieval_k,
                                 cfg.retrieval_max_distance)
                  for p in prompts]

    rows: list[ResultRow] = []
    for row_index, (mode, sweep_field, value) in enumerate(plan):
        try:
            rows.append(_run_row(cfg, corpus, model, prompts, retrievals,
                                 row_index, mode, sweep_field, value))
        except Exception as exc:
            if error_handler is None:
                raise
            error_handler(row_index, _row_label(mode, sweep_field, value), exc)
    return rows


def _row_label(mode: str, sweep_field: str | None, value: float | None) -> str:
    if sweep_field is None:
        return mode
    return f"{mode}[{sweep_field}={value:g}]"


def _run_row(cfg: ExperimentConfig, corpus: Corpus, model, prompts, retrievals,
             row_index: int, mode: str, sweep_field: str | None,
             value: float | None) -> ResultRow:
    pad_cfg = _pad_config_for(cfg, mode, sweep_field, value)
    max_len = _max_len_for(cfg, sweep_field, value)
    LOG.info("row %d (%s): %d prompts, max_len %d",
             row_index, _row_label(mode, sweep_field, value),
             len(prompts), max_len)
    row_ledger = AccountantLedger(config=pad_cfg)
    traces = []
    for i, (prompt, retrieval) in enumerate(zip(prompts, retrievals)):
        ledger = AccountantLedger(config=pad_cfg)
        if mode == EXTRACTION_LABEL:
            decoder = IdentityDecoder(ledger)
        else:
            rng = np.random.default_rng(
                np.random.SeedSequence((cfg.seed, 1, row_index, i)))
            decoder = PadDecoder(pad_cfg, rng, ledger)
        trace = generate(model, prompt, retrieval, corpus, decoder, max_len)
        traces.append(trace)
        row_ledger.extend(ledger)
    counts = aggregate(traces, corpus, retrievals, cfg.thresholds, model)
    return ResultRow(index=row_index, mode=mode, sweep_field=sweep_field,
                     sweep_value=value, counts=counts,
                     privacy=row_ledger.report(), traces=traces)


def _fmt(value) -> str:
    """Stable scalar formatting for CSV and JSON lines."""
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _row_record(row: ResultRow) -> dict[str, str]:
    rep = row.privacy
    c = row.counts
    values = {
        "row": row.index,
        "mode": row.mode,
        "sweep_field": row.sweep_field or "",
        "sweep_value": row.sweep_value,
        "retrieved_contexts": c.retrieved_contexts,
        "repeat_prompts": c.repeat_prompts,
        "repeat_contexts": c.repeat_contexts,
        "rouge_prompts": c.rouge_prompts,
        "rouge_contexts": c.rouge_contexts,
        "mean_ppl": c.mean_ppl,
        "ppl_excluded": c.ppl_excluded,
        "epsilon": rep.epsilon,
        "delta": rep.delta,
        "alpha_star": rep.alpha_star,
        "gamma": rep.gamma,
        "protected_steps": rep.protected_steps,
        "total_steps": rep.total_steps,
        "alpha_config": rep.alpha_config,
        "epsilon_at_config_alpha": rep.epsilon_at_config_alpha,
    }
    return {key: _fmt(values[key]) for key in CSV_COLUMNS}


def emit_reports(rows: list[ResultRow], out_dir,
                 cfg: ExperimentConfig | None = None) -> list[Path]:
    """Write results.csv, results.md, privacy.jsonl, and the config echo.

    Returns the written paths. Files end with a newline and use UTF-8.
    """
    if not rows:
        raise ValueError("no rows to report")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    records = [_row_record(row) for row in rows]
    written = []

    csv_path = out / "results.csv"
    with open(csv_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, lineterminator="\n")
        writer.writeheader()
        writer.writerows(records)
    written.append(csv_path)

    md_path = out / "results.md"
    md_path.write_text(render_markdown(records), encoding="utf-8")
    written.append(md_path)

    jsonl_path = out / "privacy.jsonl"
    with open(jsonl_path, "w", encoding="utf-8", newline="\n") as fh:
        for row in rows:
            obj = {"row": row.index, "mode": row.mode,
                   "sweep_field": row.sweep_field or "",
                   "sweep_value": row.sweep_value}
            obj.update(row.privacy.to_dict())
            fh.write(json.dumps(obj) + "\n")
    written.append(jsonl_path)

    if cfg is not None:
        cfg_path = out / "config.txt"
        lines = [f"{key} = {value}" for key, value in config_items(cfg)]
        cfg_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        written.append(cfg_path)
    return written


def read_results_csv(path) -> list[dict[str, str]]:
    """Read results.csv back as string records."""
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or tuple(reader.fieldnames) != CSV_COLUMNS:
            raise ValueError(f"unexpected CSV header in {path}")
        return list(reader)


def _method_label(record: dict[str, str]) -> str:
    if record["mode"] == EXTRACTION_LABEL:
        return "Extraction"
    label = f"PAD ({record['mode']})"
    if record["sweep_field"]:
        value = record["sweep_value"]
        try:
            value = f"{float(value):g}"
        except ValueError:
            pass
        label += f" [{record['sweep_field']}={value}]"
    return label


def _display(record: dict[str, str], key: str) -> str:
    raw = record[key]
    if raw == "":
        return "-"
    if key == "mean_ppl":
        return f"{float(raw):.2f}"
    if key == "epsilon":
        return f"{float(raw):.4f}"
    if key == "gamma":
        return f"{float(raw):.3f}"
    return raw


def render_markdown(records: list[dict[str, str]]) -> str:
    """Aligned markdown table over CSV records; presentational only."""
    headers = ["Method", "Retrieved Contexts", "Repeat Prompts",
               "Repeat Contexts", "ROUGE Prompts", "ROUGE Contexts",
               "PPL", "ε", "γ"]
    keys = [None, "retrieved_contexts", "repeat_prompts", "repeat_contexts",
            "rouge_prompts", "rouge_contexts", "mean_ppl", "epsilon", "gamma"]
    table = [headers]
    for record in records:
        cells = [_method_label(record)]
        cells += [_display(record, key) for key in keys[1:]]
        table.append(cells)
    widths = [max(len(row[i]) for row in table) for i in range(len(headers))]
    lines = []
    for r, row in enumerate(table):
        padded = [cell.ljust(widths[i]) for i, cell in enumerate(row)]
        lines.append("| " + " | ".join(padded) + " |")
        if r == 0:
            rule = ["-" * widths[0]] + [("-" * (widths[i] - 1)) + ":"
                                        for i in range(1, len(widths))]
            lines.append("| " + " | ".join(rule) + " |")
    return "\n".join(lines) + "\n"
