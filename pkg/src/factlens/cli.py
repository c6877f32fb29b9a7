"""Command line: dataset ingestion, configuration, pipeline orchestration,
and report emission.

Subcommands run each stage independently (decompose, evaluate, verify,
analyze) or end to end (run). Reports are JSON with sorted keys and no
timestamps, so a run with the mock provider and a fixed seed is
byte-reproducible.
"""

from __future__ import annotations

import argparse
import json
import sys
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Sequence

from . import analysis, core
from .analysis import ClassificationMetrics
from .core import (
    ALL_METRICS,
    ClaimRecord,
    Decomposition,
    EvaluationReport,
    FactLensError,
    Label,
    VerificationOutcome,
    label_from_text,
    numeric_to_level,
)
from .decomposer import DEFAULT_SEED, Decomposer
from .eval_ensemble import MODES, Evaluator, summarize_reports
from .eval_llm import LlmJudge
from .eval_statistical import StatisticalConfig
from .extraction import EntityExtractor
from .providers import (
    CachedChatProvider,
    CountingProvider,
    HttpChatProvider,
    MockChatProvider,
    ProviderConfig,
    ResponseCache,
)
from .verifier import Verifier

REPORT_SCHEMA = "factlens-report/1"

GROUND_TRUTH_GENERATOR = "ground-truth"

_TRUE_LABELS = frozenset({"true", "supported"})
_FALSE_LABELS = frozenset({"false", "refuted"})

_ROLES = ("decomposer", "judge", "verifier", "extractor")
_DEFAULT_MODELS = {
    "decomposer": "gpt-4o",
    "judge": "gpt-4o-mini",
    "verifier": "gpt-4o-mini",
    "extractor": "gpt-4o-mini",
}


class DatasetError(FactLensError):
    """A dataset file is malformed."""


class ConfigError(FactLensError):
    """A configuration file or value is malformed."""


# -- dataset ingestion ------------------------------------------------------


def normalize_gold_label(value: Any) -> bool:
    """Map dataset label spellings onto the boolean truth domain."""
    if isinstance(value, bool):
        return value
    if isinstance(value, str):
        lowered = value.strip().lower()
        if lowered in _TRUE_LABELS:
            return True
        if lowered in _FALSE_LABELS:
            return False
    raise ValueError(f"unknown gold label {value!r}")


@dataclass
class LoadedDataset:
    records: list[ClaimRecord]
    gold_decompositions: dict[str, Decomposition]
    human_scores: dict[str, dict[str, list[Label]]]


def _parse_human_scores(raw: Any) -> dict[str, list[Label]]:
    if not isinstance(raw, dict):
        raise ValueError("human_scores must map metric names to level lists")
    scores: dict[str, list[Label]] = {}
    for metric, levels in raw.items():
        if metric not in ALL_METRICS:
            raise ValueError(f"unknown metric {metric!r} in human_scores")
        if isinstance(levels, str):
            levels = [levels]
        if not isinstance(levels, list) or not levels:
            raise ValueError(f"human_scores[{metric!r}] must be a non-empty list")
        scores[metric] = [label_from_text(metric, str(level)) for level in levels]
    return scores


def load_dataset(path: str | Path) -> LoadedDataset:
    """Load newline-delimited claim records, validating every line.

    Each record needs id/claim/evidence/label; optional fields are source,
    sub_claims (becomes a ground-truth decomposition) and human_scores.
    """
    path = Path(path)
    if not path.exists():
        raise DatasetError(f"dataset file not found: {path}")
    records: list[ClaimRecord] = []
    gold: dict[str, Decomposition] = {}
    human: dict[str, dict[str, list[Label]]] = {}
    seen_ids: set[str] = set()
    for lineno, line in enumerate(path.read_text("utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            raw = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DatasetError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
        if not isinstance(raw, dict):
            raise DatasetError(f"{path}:{lineno}: record must be an object")
        try:
            record = _parse_record(raw)
        except (KeyError, TypeError, ValueError) as exc:
            raise DatasetError(f"{path}:{lineno}: {exc}") from exc
        if record.id in seen_ids:
            raise DatasetError(f"{path}:{lineno}: duplicate id {record.id!r}")
        seen_ids.add(record.id)
        records.append(record)
        try:
            if "sub_claims" in raw:
                gold[record.id] = _parse_gold_subclaims(raw["sub_claims"], record.id)
            if "human_scores" in raw:
                human[record.id] = _parse_human_scores(raw["human_scores"])
        except ValueError as exc:
            raise DatasetError(f"{path}:{lineno}: {exc}") from exc
    return LoadedDataset(records=records, gold_decompositions=gold, human_scores=human)


def _parse_record(raw: dict) -> ClaimRecord:
    for key in ("id", "claim", "evidence", "label"):
        if key not in raw:
            raise ValueError(f"missing field {key!r}")
    for key in ("id", "claim", "evidence"):
        if not isinstance(raw[key], str):
            raise ValueError(f"field {key!r} must be a string")
    return ClaimRecord(
        id=raw["id"],
        claim=raw["claim"],
        evidence=raw["evidence"],
        gold_label=normalize_gold_label(raw["label"]),
        source=str(raw.get("source", "")),
    )


def _parse_gold_subclaims(raw: Any, claim_id: str) -> Decomposition:
    if not isinstance(raw, list) or not all(isinstance(s, str) for s in raw):
        raise ValueError("sub_claims must be a list of strings")
    return Decomposition(
        claim_id=claim_id, sub_claims=tuple(raw), generator=GROUND_TRUTH_GENERATOR, seed=0
    )


def dump_dataset(dataset: LoadedDataset, path: str | Path) -> None:
    """Serialize a dataset back to newline-delimited records."""
    lines = []
    for record in dataset.records:
        entry: dict[str, Any] = {
            "id": record.id,
            "claim": record.claim,
            "evidence": record.evidence,
            "label": record.gold_label,
        }
        if record.source:
            entry["source"] = record.source
        if record.id in dataset.gold_decompositions:
            entry["sub_claims"] = list(dataset.gold_decompositions[record.id].sub_claims)
        if record.id in dataset.human_scores:
            entry["human_scores"] = {
                metric: [label.text for label in labels]
                for metric, labels in dataset.human_scores[record.id].items()
            }
        lines.append(json.dumps(entry, ensure_ascii=False, sort_keys=True))
    Path(path).write_text("\n".join(lines) + "\n", "utf-8")


# -- configuration ----------------------------------------------------------


@dataclass
class RunConfig:
    """Everything one pipeline invocation needs."""

    input_path: Path
    output_path: Path
    mode: str = "ensemble"
    seed: int = DEFAULT_SEED
    parallelism: int = 4
    cache_dir: Path | None = None
    prompts_dir: Path | None = None
    use_gold_subclaims: bool = False
    holistic: bool = False
    mock_fixtures: Path | None = None
    models: dict[str, str] = field(default_factory=lambda: dict(_DEFAULT_MODELS))
    statistical: StatisticalConfig = field(default_factory=StatisticalConfig)
    regression_l2: float = 0.01
    api_base: str | None = None
    api_key: str | None = None
    timeout_seconds: int | None = None
    max_retries: int | None = None
    requests_per_minute: int | None = None
    max_parallel: int | None = None
    route: str | None = None

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}; expected one of {MODES}")
        if self.parallelism < 1:
            raise ConfigError("parallelism must be >= 1")


def parse_config_file(path: str | Path) -> dict[str, str]:
    """Parse ``key=value`` lines with ``#`` comments into a flat dict."""
    values: dict[str, str] = {}
    for lineno, line in enumerate(Path(path).read_text("utf-8").splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {stripped!r}")
        key, value = stripped.split("=", 1)
        values[key.strip()] = value.strip()
    return values


def _apply_config_values(config: RunConfig, values: dict[str, str]) -> RunConfig:
    stat = config.statistical
    for key, value in values.items():
        try:
            if key == "statistical.similarity_threshold":
                stat = replace(stat, similarity_threshold=float(value))
            elif key == "statistical.fab_medium_max":
                stat = replace(stat, fab_medium_max=int(value))
            elif key == "statistical.red_medium_max":
                stat = replace(stat, red_medium_max=int(value))
            elif key in {f"{role}.model" for role in _ROLES}:
                config.models[key.split(".")[0]] = value
            elif key == "regression.l2":
                config.regression_l2 = float(value)
            elif key == "provider.api_base":
                config.api_base = value
            elif key == "provider.api_key":
                config.api_key = value
            elif key == "provider.timeout_seconds":
                config.timeout_seconds = int(value)
            elif key == "provider.max_retries":
                config.max_retries = int(value)
            elif key == "provider.requests_per_minute":
                config.requests_per_minute = int(value)
            elif key == "provider.max_parallel":
                config.max_parallel = int(value)
            elif key == "provider.route":
                config.route = value
            elif key == "run.mode":
                config.mode = value
            elif key == "run.seed":
                config.seed = int(value)
            elif key == "run.parallelism":
                config.parallelism = int(value)
            elif key == "run.cache_dir":
                config.cache_dir = Path(value)
            elif key == "run.prompts_dir":
                config.prompts_dir = Path(value)
            else:
                raise ConfigError(f"unknown config key {key!r}")
        except ValueError as exc:
            raise ConfigError(f"bad value for {key!r}: {exc}") from exc
    config.statistical = stat
    return config


def build_run_config(args: argparse.Namespace) -> RunConfig:
    config = RunConfig(
        input_path=Path(args.input),
        output_path=Path(args.output),
    )
    if getattr(args, "config", None):
        config = _apply_config_values(config, parse_config_file(args.config))
    # CLI flags override config-file values.
    for name in ("mode", "seed", "parallelism"):
        value = getattr(args, name, None)
        if value is not None:
            setattr(config, name, value)
    for name in ("cache_dir", "prompts_dir", "mock_fixtures"):
        value = getattr(args, name, None)
        if value is not None:
            setattr(config, name, Path(value))
    config.use_gold_subclaims = bool(getattr(args, "use_gold_subclaims", False))
    config.holistic = bool(getattr(args, "holistic", False))
    config.__post_init__()
    return config


# -- pipeline ---------------------------------------------------------------


@dataclass
class PipelineTools:
    decomposer: Decomposer
    evaluator: Evaluator
    verifier: Verifier
    counters: dict[str, CountingProvider]


@dataclass
class InstanceResult:
    record: ClaimRecord
    decomposition: Decomposition
    report: EvaluationReport | None = None
    outcome: VerificationOutcome | None = None
    holistic_label: bool | None = None


@dataclass
class InstanceFailure:
    claim_id: str
    stage: str
    message: str


def build_tools(config: RunConfig) -> PipelineTools:
    """Wire providers (mock or HTTP, optionally cached) into the stages."""
    if config.mock_fixtures is not None:
        base = MockChatProvider.from_fixture_file(config.mock_fixtures)
    else:
        try:
            provider_config = ProviderConfig.from_env(
                api_base=config.api_base,
                api_key=config.api_key,
                timeout_seconds=config.timeout_seconds,
                max_retries=config.max_retries,
                requests_per_minute=config.requests_per_minute,
                max_parallel=config.max_parallel,
                route=config.route,
            )
        except ValueError as exc:
            raise ConfigError(
                f"provider configuration invalid (set FACTLENS_API_BASE or provider.api_base): {exc}"
            ) from exc
        base = HttpChatProvider(provider_config)
    if config.cache_dir is not None:
        base = CachedChatProvider(base, ResponseCache(config.cache_dir))
    counters = {role: CountingProvider(base) for role in _ROLES}
    prompts_dir = config.prompts_dir
    return PipelineTools(
        decomposer=Decomposer(
            counters["decomposer"],
            model=config.models["decomposer"],
            prompts_dir=prompts_dir,
            seed=config.seed,
        ),
        evaluator=Evaluator(
            extractor=EntityExtractor(
                counters["extractor"], model=config.models["extractor"], prompts_dir=prompts_dir
            ),
            judge=LlmJudge(
                counters["judge"], model=config.models["judge"], prompts_dir=prompts_dir
            ),
            config=config.statistical,
            mode=config.mode,
        ),
        verifier=Verifier(
            counters["verifier"], model=config.models["verifier"], prompts_dir=prompts_dir
        ),
        counters=counters,
    )


def _process_instance(
    record: ClaimRecord,
    dataset: LoadedDataset,
    tools: PipelineTools,
    config: RunConfig,
    stages: frozenset[str],
) -> InstanceResult | InstanceFailure:
    stage = "decompose"
    try:
        gold = dataset.gold_decompositions.get(record.id)
        if config.use_gold_subclaims and gold is not None:
            decomposition = gold
        else:
            decomposition = tools.decomposer.decompose(record, config.seed)
        result = InstanceResult(record=record, decomposition=decomposition)
        if "evaluate" in stages:
            stage = "evaluate"
            result.report = tools.evaluator.evaluate(record, decomposition)
        if "verify" in stages:
            stage = "verify"
            result.outcome = tools.verifier.verify_fine_grained(record, decomposition)
            if config.holistic:
                stage = "verify-holistic"
                result.holistic_label = tools.verifier.verify_holistic(record)
        return result
    except (FactLensError, ValueError) as exc:
        return InstanceFailure(claim_id=record.id, stage=stage, message=str(exc))


def execute_pipeline(
    config: RunConfig, stages: frozenset[str]
) -> tuple[LoadedDataset, list[InstanceResult], list[InstanceFailure], PipelineTools]:
    dataset = load_dataset(config.input_path)
    tools = build_tools(config)
    with ThreadPoolExecutor(max_workers=config.parallelism) as pool:
        processed = list(
            pool.map(
                lambda record: _process_instance(record, dataset, tools, config, stages),
                dataset.records,
            )
        )
    results = sorted(
        (p for p in processed if isinstance(p, InstanceResult)), key=lambda r: r.record.id
    )
    failures = sorted(
        (p for p in processed if isinstance(p, InstanceFailure)), key=lambda f: f.claim_id
    )
    return dataset, results, failures, tools


# -- analyses ---------------------------------------------------------------

REGRESSION_FEATURES = (core.ATOMICITY, core.SUFFICIENCY, core.FABRICATION, core.COVERAGE)


def _metrics_to_json(metrics: ClassificationMetrics | None) -> dict | None:
    if metrics is None:
        return None
    return {
        "accuracy": metrics.accuracy,
        "macro_precision": metrics.macro_precision,
        "macro_recall": metrics.macro_recall,
        "macro_f1": metrics.macro_f1,
        "true_class": {
            "precision": metrics.pos.precision,
            "recall": metrics.pos.recall,
            "f1": metrics.pos.f1,
            "support": metrics.pos.support,
        },
        "false_class": {
            "precision": metrics.neg.precision,
            "recall": metrics.neg.recall,
            "f1": metrics.neg.f1,
            "support": metrics.neg.support,
        },
    }


def _quality_bins(
    reports: list[EvaluationReport],
    outcomes: list[VerificationOutcome],
    golds: list[bool],
) -> dict[str, Any]:
    bins: dict[str, Any] = {}
    scored = set()
    for report in reports:
        scored.update(report.metrics)
    for metric in ALL_METRICS:
        if metric not in scored:
            continue
        table = analysis.bin_by_metric_level(reports, outcomes, golds, metric)
        bins[metric] = {
            level.text: {"count": row.count, "metrics": _metrics_to_json(row.metrics)}
            for level, row in table.items()
        }
    return bins


def _regression(
    reports: list[EvaluationReport],
    outcomes: list[VerificationOutcome],
    golds: list[bool],
    l2: float,
) -> dict[str, Any]:
    rows = []
    for report, outcome, gold in zip(reports, outcomes, golds):
        if report.n_subclaims <= 1:
            continue
        if any(metric not in report.means for metric in REGRESSION_FEATURES):
            return {"skipped": "regression needs all four feature metrics in every report"}
        rows.append(
            (
                [report.means[metric] for metric in REGRESSION_FEATURES],
                outcome.aggregated_label == gold,
            )
        )
    if len(rows) < 2:
        return {"skipped": "too few multi-sub-claim instances for regression"}
    features = [row[0] for row in rows]
    targets = [row[1] for row in rows]
    if all(targets) or not any(targets):
        return {"skipped": "verification correctness is single-class; nothing to fit"}
    model = analysis.fit_logistic(features, targets, l2=l2, feature_names=REGRESSION_FEATURES)
    training = analysis.classification_metrics(list(model.predict(features)), targets)
    return {
        "features": list(REGRESSION_FEATURES),
        "weights": dict(zip(REGRESSION_FEATURES, model.weights)),
        "bias": model.bias,
        "l2": l2,
        "instances": len(rows),
        "training_metrics": _metrics_to_json(training),
        "note": "training fit on standardized features",
    }


def _human_alignment(
    reports: list[EvaluationReport],
    human_scores: dict[str, dict[str, list[Label]]],
) -> dict[str, Any] | None:
    if not human_scores:
        return None
    alignment: dict[str, Any] = {}
    for metric in ALL_METRICS:
        evaluator_values: list[float] = []
        human_means: list[float] = []
        rater_rows: list[list[int | None]] = []
        human_rows: list[list[int | None]] = []
        max_raters = 0
        for report in reports:
            labels = human_scores.get(report.claim_id, {}).get(metric)
            if not labels or metric not in report.means:
                continue
            evaluator_values.append(report.means[metric])
            human_means.append(sum(int(l) for l in labels) / len(labels))
            rater_rows.append([int(numeric_to_level(report.means[metric]))] + [int(l) for l in labels])
            human_rows.append([int(l) for l in labels])
            max_raters = max(max_raters, len(labels))
        if not evaluator_values:
            continue
        entry: dict[str, Any] = {"items": len(evaluator_values)}
        try:
            result = analysis.correlate(evaluator_values, human_means)
            entry["correlation"] = {
                "r": result.r,
                "rho": result.rho,
                "p_r": result.p_r,
                "p_rho": result.p_rho,
                "n": result.n,
            }
        except ValueError as exc:
            entry["correlation"] = {"skipped": str(exc)}
        entry["evaluator_human_alpha"] = _try_alpha(
            [_pad(row, 1 + max_raters) for row in rater_rows]
        )
        if max_raters >= 2:
            entry["inter_annotator_alpha"] = _try_alpha(
                [_pad(row, max_raters) for row in human_rows]
            )
        else:
            entry["inter_annotator_alpha"] = {"skipped": "fewer than 2 annotators"}
        alignment[metric] = entry
    return alignment or None


def _pad(row: list[int | None], width: int) -> list[int | None]:
    return row + [None] * (width - len(row))


def _try_alpha(matrix: list[list[int | None]]) -> Any:
    try:
        return analysis.krippendorff_ordinal(matrix)
    except ValueError as exc:
        return {"skipped": str(exc)}


def build_analyses(
    results: list[InstanceResult],
    human_scores: dict[str, dict[str, list[Label]]],
    config: RunConfig,
) -> dict[str, Any]:
    """All dataset-level statistics available for the completed instances."""
    analyses: dict[str, Any] = {}
    with_reports = [r for r in results if r.report is not None]
    with_outcomes = [r for r in results if r.outcome is not None]
    analyses["metric_means"] = (
        summarize_reports([r.report for r in with_reports]) if with_reports else {}
    )
    analyses["subclaim_count_distribution"] = dict(
        sorted(Counter(str(r.decomposition.n) for r in results).items())
    )
    full = [r for r in results if r.report is not None and r.outcome is not None]
    if full:
        reports = [r.report for r in full]
        outcomes = [r.outcome for r in full]
        golds = [r.record.gold_label for r in full]
        analyses["quality_bins"] = _quality_bins(reports, outcomes, golds)
        analyses["regression"] = _regression(reports, outcomes, golds, config.regression_l2)
    else:
        analyses["quality_bins"] = {}
        analyses["regression"] = {"skipped": "no fully evaluated instances"}
    holistic = [r for r in with_outcomes if r.holistic_label is not None]
    if holistic:
        table = analysis.bin_by_subclaim_count(
            [r.outcome for r in holistic],
            [r.holistic_label for r in holistic],
            [r.record.gold_label for r in holistic],
        )
        analyses["complexity_bins"] = {
            str(n): {
                "count": row.count,
                "fine_grained": _metrics_to_json(row.fine_grained),
                "holistic": _metrics_to_json(row.holistic),
            }
            for n, row in table.items()
        }
    else:
        analyses["complexity_bins"] = None
    analyses["human_alignment"] = _human_alignment(
        [r.report for r in with_reports], human_scores
    )
    return analyses


# -- report emission --------------------------------------------------------


def _entities_to_json(entities) -> dict | None:
    if entities is None:
        return None
    return {"subjects": list(entities.subjects), "objects": list(entities.objects)}


def _claim_entry(
    result: InstanceResult, human: dict[str, list[Label]] | None
) -> dict[str, Any]:
    entry: dict[str, Any] = {
        "id": result.record.id,
        "gold_label": result.record.gold_label,
        "n_subclaims": result.decomposition.n,
        "sub_claims": list(result.decomposition.sub_claims),
        "generator": result.decomposition.generator,
        "seed": result.decomposition.seed,
    }
    if result.record.source:
        entry["source"] = result.record.source
    report = result.report
    if report is not None:
        scores: dict[str, Any] = {}
        for metric in report.metrics:
            block: dict[str, Any] = {
                "source": report.sources[metric],
                "mean": report.means[metric],
            }
            if metric in report.per_subclaim:
                block["labels"] = [label.text for label in report.per_subclaim[metric]]
            else:
                block["level"] = report.claim_level[metric].text
            scores[metric] = block
        entry["scores"] = scores
        diag = report.diagnostics
        entry["diagnostics"] = {
            "fab": diag.fab,
            "red": diag.red,
            "relation_free_subclaims": list(diag.relation_free_subclaims),
            "claim_entities": _entities_to_json(diag.claim_entities),
            "subclaim_entities": (
                [_entities_to_json(a) for a in diag.subclaim_annotations]
                if diag.subclaim_annotations is not None
                else None
            ),
        }
    outcome = result.outcome
    if outcome is not None:
        entry["verification"] = {
            "subclaim_labels": list(outcome.subclaim_labels),
            "aggregated_label": outcome.aggregated_label,
            "holistic_label": result.holistic_label,
            "correct": outcome.aggregated_label == result.record.gold_label,
            "rationales": list(outcome.rationales) if outcome.rationales else None,
        }
    if human:
        entry["human_scores"] = {
            metric: [label.text for label in labels] for metric, labels in human.items()
        }
    return entry


def assemble_report(
    config: RunConfig,
    dataset: LoadedDataset,
    results: list[InstanceResult],
    failures: list[InstanceFailure],
    tools: PipelineTools,
    analyses: dict[str, Any],
) -> dict[str, Any]:
    report = {
        "schema": REPORT_SCHEMA,
        "mode": config.mode,
        "seed": config.seed,
        "models": dict(config.models),
        "statistical_config": {
            "similarity_threshold": config.statistical.similarity_threshold,
            "fab_medium_max": config.statistical.fab_medium_max,
            "red_medium_max": config.statistical.red_medium_max,
        },
        "flags": {
            "use_gold_subclaims": config.use_gold_subclaims,
            "holistic": config.holistic,
        },
        "dataset": {"path": str(config.input_path), "instances": len(dataset.records)},
        "analyzed": len(results),
        "claims": [
            _claim_entry(result, dataset.human_scores.get(result.record.id))
            for result in results
        ],
        "failures": [
            {"claim_id": f.claim_id, "stage": f.stage, "message": f.message} for f in failures
        ],
        "provider_calls": {role: counter.calls for role, counter in tools.counters.items()},
    }
    report.update(analyses)
    return report


def _write_output(path: str | Path, text: str) -> None:
    try:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text, "utf-8")
    except OSError as exc:
        raise FactLensError(f"cannot write output to {path}: {exc}") from exc


def emit_report(report: dict[str, Any], path: str | Path) -> None:
    """Write a report with stable key ordering for byte-reproducibility."""
    _write_output(path, json.dumps(report, indent=2, sort_keys=True, ensure_ascii=False) + "\n")


# -- subcommands ------------------------------------------------------------


def _exit_code(failures: Sequence[InstanceFailure]) -> int:
    return 2 if failures else 0


def cmd_run(args: argparse.Namespace) -> int:
    config = build_run_config(args)
    dataset, results, failures, tools = execute_pipeline(
        config, frozenset({"evaluate", "verify"})
    )
    analyses = build_analyses(results, dataset.human_scores, config)
    report = assemble_report(config, dataset, results, failures, tools, analyses)
    emit_report(report, config.output_path)
    return _exit_code(failures)


def cmd_decompose(args: argparse.Namespace) -> int:
    config = build_run_config(args)
    _, results, failures, _ = execute_pipeline(config, frozenset())
    lines = [
        json.dumps(
            {
                "claim_id": r.record.id,
                "sub_claims": list(r.decomposition.sub_claims),
                "generator": r.decomposition.generator,
                "seed": r.decomposition.seed,
            },
            ensure_ascii=False,
            sort_keys=True,
        )
        for r in results
    ]
    _write_output(config.output_path, "\n".join(lines) + "\n")
    for failure in failures:
        print(f"failed {failure.claim_id} ({failure.stage}): {failure.message}", file=sys.stderr)
    return _exit_code(failures)


def cmd_evaluate(args: argparse.Namespace) -> int:
    config = build_run_config(args)
    dataset, results, failures, tools = execute_pipeline(config, frozenset({"evaluate"}))
    analyses = build_analyses(results, dataset.human_scores, config)
    report = assemble_report(config, dataset, results, failures, tools, analyses)
    emit_report(report, config.output_path)
    return _exit_code(failures)


def cmd_verify(args: argparse.Namespace) -> int:
    config = build_run_config(args)
    dataset, results, failures, tools = execute_pipeline(config, frozenset({"verify"}))
    analyses = build_analyses(results, dataset.human_scores, config)
    report = assemble_report(config, dataset, results, failures, tools, analyses)
    emit_report(report, config.output_path)
    return _exit_code(failures)


def cmd_analyze(args: argparse.Namespace) -> int:
    """Recompute the analysis sections from an existing run report."""
    config = build_run_config(args)
    try:
        report = json.loads(Path(config.input_path).read_text("utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise FactLensError(f"cannot read report {config.input_path}: {exc}") from exc
    results, human_scores = _results_from_report(report)
    analyses = build_analyses(results, human_scores, config)
    analyses["schema"] = REPORT_SCHEMA + "/analysis"
    analyses["source_report"] = str(config.input_path)
    analyses["analyzed"] = len(results)
    emit_report(analyses, config.output_path)
    return 0


def _results_from_report(
    report: dict,
) -> tuple[list[InstanceResult], dict[str, dict[str, list[Label]]]]:
    if "claims" not in report:
        raise FactLensError("report has no claims section")
    results: list[InstanceResult] = []
    human: dict[str, dict[str, list[Label]]] = {}
    for entry in report["claims"]:
        record = ClaimRecord(
            id=entry["id"],
            claim=entry.get("claim", entry["id"]),
            evidence=entry.get("evidence", "(not stored)"),
            gold_label=bool(entry["gold_label"]),
        )
        decomposition = Decomposition(
            claim_id=entry["id"],
            sub_claims=tuple(entry["sub_claims"]),
            generator=entry.get("generator", "unknown"),
            seed=int(entry.get("seed", 0)),
        )
        result = InstanceResult(record=record, decomposition=decomposition)
        scores = entry.get("scores")
        if scores:
            per_subclaim: dict[str, tuple[Label, ...]] = {}
            claim_level: dict[str, core.OrdinalScore] = {}
            means: dict[str, float] = {}
            sources: dict[str, str] = {}
            for metric, block in scores.items():
                if "labels" in block:
                    per_subclaim[metric] = tuple(
                        label_from_text(metric, text) for text in block["labels"]
                    )
                else:
                    claim_level[metric] = core.OrdinalScore.from_text(block["level"])
                means[metric] = float(block["mean"])
                sources[metric] = block["source"]
            result.report = EvaluationReport(
                claim_id=entry["id"],
                n_subclaims=decomposition.n,
                per_subclaim=per_subclaim,
                claim_level=claim_level,
                means=means,
                sources=sources,
            )
        verification = entry.get("verification")
        if verification:
            result.outcome = VerificationOutcome(
                claim_id=entry["id"],
                subclaim_labels=tuple(bool(b) for b in verification["subclaim_labels"]),
                aggregated_label=bool(verification["aggregated_label"]),
            )
            result.holistic_label = verification.get("holistic_label")
        if entry.get("human_scores"):
            human[entry["id"]] = {
                metric: [label_from_text(metric, text) for text in texts]
                for metric, texts in entry["human_scores"].items()
            }
        results.append(result)
    return results, human


# -- argument parsing -------------------------------------------------------


def _add_common_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--input", required=True, help="dataset file (newline-delimited records)")
    parser.add_argument("--output", required=True, help="report output path")
    parser.add_argument("--config", help="key=value configuration file")
    parser.add_argument("--mode", choices=MODES, help="evaluator mode")
    parser.add_argument("--seed", type=int, help="demonstration-sampling seed")
    parser.add_argument("--parallelism", type=int, help="worker pool size")
    parser.add_argument("--cache-dir", dest="cache_dir", help="response cache directory")
    parser.add_argument("--prompts-dir", dest="prompts_dir", help="prompt template overrides")
    parser.add_argument(
        "--use-gold-subclaims",
        dest="use_gold_subclaims",
        action="store_true",
        help="prefer dataset-provided sub-claims over decomposition",
    )
    parser.add_argument(
        "--holistic",
        action="store_true",
        help="also verify each whole claim without decomposition",
    )
    parser.add_argument(
        "--mock-fixtures",
        dest="mock_fixtures",
        help="canned route table for offline runs",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="factlens",
        description="Fine-grained fact verification: decompose, evaluate, verify, analyze.",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name, func, description in (
        ("run", cmd_run, "full pipeline: decompose, evaluate, verify, analyze"),
        ("decompose", cmd_decompose, "decompose claims into sub-claims"),
        ("evaluate", cmd_evaluate, "decompose and score sub-claim quality"),
        ("verify", cmd_verify, "decompose and verify against evidence"),
        ("analyze", cmd_analyze, "recompute analyses from an existing report"),
    ):
        sub = subparsers.add_parser(name, help=description)
        _add_common_arguments(sub)
        sub.set_defaults(func=func)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except FactLensError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
