"""Record-stream processing: score, pair, analyze.

Streams are JSON Lines. Scoring preserves input order, never drops a
record silently (every input becomes exactly one scored record or one
failure record), and parallelizes across worker threads since per-record
work is transport-bound. Failure records carry the stage that failed:
"ingest" for malformed input, else the backend stage name.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import prompts
from .clients import (
    HttpJudgeClient,
    HttpRmClient,
    JudgeClient,
    RetryingJudgeClient,
    RetryingRmClient,
    RmClient,
    TableJudgeMock,
    TableRmMock,
)
from .config import ConfigError, EngineConfig
from .engine import (
    COT_JUDGE_ROLE,
    FORMAT_JUDGE_ROLE,
    STAGE_COT_JUDGE,
    STAGE_FORMAT_JUDGE,
    STAGE_RM,
    StageFailure,
    score_response,
)
from .judges import build_cot_reply, build_judge_reply
from .metrics import histogram, pairwise_accuracy, wasserstein_1d
from .types import GroundTruth, PreferencePair, RawResponse

STAGE_INGEST = "ingest"

SOURCE_TARGET = "target-model"
NEGATIVE_SOURCES = ("pns-model", "rejection-sampling")

BREAKDOWN_FIELDS = ("r_rule", "r_judge", "r_format", "r_acc", "rm_raw",
                    "rm_norm", "cot_dims", "r_cot", "r_pns")


@dataclass(frozen=True)
class ResponseRecord:
    """One input line, validated."""

    question_id: str
    prompt: str
    response: str
    source: str
    ground_truth: str

    @staticmethod
    def from_dict(d: dict) -> "ResponseRecord":
        if not isinstance(d, dict):
            raise ValueError("record must be a JSON object")
        for key in ("question_id", "prompt", "response", "source", "ground_truth"):
            if key not in d:
                raise ValueError(f"record is missing {key!r}")
            if not isinstance(d[key], str):
                raise ValueError(f"record field {key!r} must be a string")
        if not d["question_id"]:
            raise ValueError("question_id must be non-empty")
        if not d["response"]:
            raise ValueError("response must be non-empty")
        if not d["ground_truth"].strip():
            raise ValueError("ground_truth must be non-empty")
        return ResponseRecord(
            question_id=d["question_id"],
            prompt=d["prompt"],
            response=d["response"],
            source=d["source"],
            ground_truth=d["ground_truth"],
        )

    def as_dict(self) -> dict:
        return {
            "question_id": self.question_id,
            "prompt": self.prompt,
            "response": self.response,
            "source": self.source,
            "ground_truth": self.ground_truth,
        }


def read_jsonl(path: str):
    """Yield parsed objects; raises OSError if the file is unreadable."""
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                yield json.loads(line)


def write_jsonl(path: str, records) -> int:
    n = 0
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec) + "\n")
            n += 1
    return n


def _failure(question_id: str, stage: str, error: str) -> dict:
    return {"question_id": question_id, "stage": stage, "error": error}


def run_score(lines, judge: JudgeClient, rm: RmClient, cfg: EngineConfig,
              workers: int | None = None) -> tuple[list[dict], list[dict]]:
    """Score raw JSONL lines; returns (scored, failures), each input-ordered.

    Exactly one output record exists per input line. Malformed lines become
    ingest failures; backend failures (after the client's own retries)
    become stage failures; everything else becomes a scored record carrying
    the input fields plus the full reward breakdown.
    """
    tasks: list[tuple[str, object]] = []
    for raw in lines:
        text = raw.strip()
        if not text:
            continue
        try:
            record = ResponseRecord.from_dict(json.loads(text))
            tasks.append(("record", record))
        except (json.JSONDecodeError, ValueError) as exc:
            qid = ""
            try:
                maybe = json.loads(text)
                if isinstance(maybe, dict) and isinstance(maybe.get("question_id"), str):
                    qid = maybe["question_id"]
            except json.JSONDecodeError:
                pass
            tasks.append(("failure", _failure(qid, STAGE_INGEST, str(exc))))

    def score_one(task):
        kind, payload = task
        if kind == "failure":
            return task
        record = payload
        truth = GroundTruth(record.question_id, record.ground_truth)
        try:
            breakdown = score_response(record.prompt, record.response, truth,
                                       judge, rm, cfg.reward)
        except StageFailure as exc:
            return ("failure", _failure(record.question_id, exc.stage, str(exc.error)))
        return ("scored", {**record.as_dict(), **breakdown.as_dict()})

    n_workers = workers or min(32, os.cpu_count() or 1)
    if n_workers < 1:
        raise ValueError("workers must be positive")
    if n_workers == 1:
        results = [score_one(t) for t in tasks]
    else:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            results = list(pool.map(score_one, tasks))

    scored = [payload for kind, payload in results if kind == "scored"]
    failures = [payload for kind, payload in results if kind == "failure"]
    if len(scored) + len(failures) != len(tasks):
        raise RuntimeError("stream discipline violated: outputs + failures != inputs")
    return scored, failures


def build_pairs(target_records, negative_records,
                cross_product: bool = False) -> tuple[list[dict], dict]:
    """Pair verified-correct target responses with scored negatives.

    Chosen side: target-model records with accuracy 1. Rejected side:
    negative-pool records with accuracy 0 (a "negative" that lands the
    right answer is excluded and counted). Within a question, pairing is
    index-aligned in stream order unless ``cross_product`` is set. Pairs
    whose sides disagree on the prompt are skipped and counted.
    """
    chosen_by_q: dict[str, list[dict]] = {}
    rejected_by_q: dict[str, list[dict]] = {}
    order: list[str] = []
    stats = {
        "pairs_emitted": 0,
        "questions_paired": 0,
        "questions_skipped_no_chosen": 0,
        "questions_skipped_no_rejected": 0,
        "chosen_filtered_out": 0,
        "rejected_filtered_out": 0,
        "prompt_mismatch_skipped": 0,
    }
    for rec in target_records:
        qid = rec["question_id"]
        if qid not in chosen_by_q and qid not in rejected_by_q:
            order.append(qid)
        if rec.get("source") == SOURCE_TARGET and rec.get("r_acc") == 1:
            chosen_by_q.setdefault(qid, []).append(rec)
        else:
            stats["chosen_filtered_out"] += 1
            chosen_by_q.setdefault(qid, [])
    for rec in negative_records:
        qid = rec["question_id"]
        if qid not in chosen_by_q and qid not in rejected_by_q:
            order.append(qid)
        if rec.get("source") in NEGATIVE_SOURCES and rec.get("r_acc") == 0:
            rejected_by_q.setdefault(qid, []).append(rec)
        else:
            stats["rejected_filtered_out"] += 1
            rejected_by_q.setdefault(qid, [])

    pairs: list[dict] = []
    for qid in order:
        chosen = chosen_by_q.get(qid, [])
        rejected = rejected_by_q.get(qid, [])
        if not chosen:
            stats["questions_skipped_no_chosen"] += 1
            continue
        if not rejected:
            stats["questions_skipped_no_rejected"] += 1
            continue
        if cross_product:
            combos = [(c, r) for c in chosen for r in rejected]
        else:
            combos = list(zip(chosen, rejected))
        emitted_any = False
        for c, r in combos:
            if c["prompt"] != r["prompt"]:
                stats["prompt_mismatch_skipped"] += 1
                continue
            pair = PreferencePair(
                question_id=qid,
                prompt=c["prompt"],
                chosen=RawResponse(qid, c["response"]),
                rejected=RawResponse(qid, r["response"]),
                chosen_source=c["source"],
                rejected_source=r["source"],
            )
            pairs.append(pair.as_dict())
            emitted_any = True
        if emitted_any:
            stats["questions_paired"] += 1
    stats["pairs_emitted"] = len(pairs)
    return pairs, stats


def analyze_streams(named_records: dict[str, list[dict]], field: str = "rm_raw",
                    bins: int = 20, pairs=None) -> dict:
    """Distribution report over one numeric field of scored streams.

    Histograms share one fixed-width bin grid spanning all streams so they
    are directly comparable. Every unordered stream pair gets an
    earth-mover distance. Optional (chosen, rejected) score pairs add a
    ranking accuracy block.
    """
    if not named_records:
        raise ValueError("need at least one stream")
    values: dict[str, list[float]] = {}
    for name, records in named_records.items():
        if not records:
            raise ValueError(f"stream {name!r} is empty")
        try:
            values[name] = [float(rec[field]) for rec in records]
        except KeyError as exc:
            raise ValueError(f"stream {name!r} has a record without field {field!r}") from exc
    lo = min(min(v) for v in values.values())
    hi = max(max(v) for v in values.values())
    if lo == hi:
        hi = lo + 1.0
    streams = {}
    for name, vals in values.items():
        arr = np.asarray(vals)
        streams[name] = {
            "n": int(arr.size),
            "mean": float(arr.mean()),
            "std": float(arr.std()),
            "min": float(arr.min()),
            "max": float(arr.max()),
            "scores": [float(v) for v in vals],
            "histogram": histogram(vals, bins=bins, value_range=(lo, hi)),
        }
    names = list(values)
    distances = [
        {"a": a, "b": b, "wasserstein": wasserstein_1d(values[a], values[b])}
        for i, a in enumerate(names)
        for b in names[i + 1:]
    ]
    report = {"field": field, "streams": streams, "wasserstein": distances}
    if pairs is not None:
        pairs = list(pairs)
        report["preference"] = {
            "n_pairs": len(pairs),
            "pairwise_accuracy": pairwise_accuracy(pairs),
        }
    return report


def _judge_defaults(spec: dict) -> dict[str, str]:
    verdict = spec.get("default_verdict", "pass")
    dims = spec.get("default_dims", [3, 3, 3, 3])
    return {
        FORMAT_JUDGE_ROLE: build_judge_reply(verdict),
        COT_JUDGE_ROLE: build_cot_reply(*dims),
    }


def load_mock_clients(path: str) -> tuple[JudgeClient, RmClient]:
    """Build offline clients from a JSON mock spec.

    The table pins replies per response text (prompts are rendered here, so
    keys in the file stay human-sized) and can inject transport failures
    per stage for drill runs::

        {
          "default_verdict": "pass",
          "default_dims": [3, 3, 3, 3],
          "default_score": 0.0,
          "judgments": [{"response": "...", "verdict": "fail"}],
          "cot": [{"prompt": "...", "response": "...", "dims": [3, 2, 3, 1]}],
          "rm": [{"prompt": "...", "response": "...", "score": 2.7}],
          "fail": [{"stage": "rm", "prompt": "...", "response": "..."}]
        }
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            spec = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot load mock table {path}: {exc}") from exc
    if not isinstance(spec, dict):
        raise ConfigError(f"mock table {path} must be a JSON object")

    judge_table: dict[tuple[str, str], str] = {}
    judge_fail: set[tuple[str, str]] = set()
    rm_table: dict[tuple[str, str], float] = {}
    rm_fail: set[tuple[str, str]] = set()
    try:
        for entry in spec.get("judgments", []):
            key = (FORMAT_JUDGE_ROLE, prompts.render_format_judge_prompt(entry["response"]))
            judge_table[key] = build_judge_reply(entry["verdict"])
        for entry in spec.get("cot", []):
            key = (COT_JUDGE_ROLE,
                   prompts.render_cot_judge_prompt(entry["prompt"], entry["response"]))
            judge_table[key] = build_cot_reply(*entry["dims"])
        for entry in spec.get("rm", []):
            rm_table[(entry["prompt"], entry["response"])] = float(entry["score"])
        for entry in spec.get("fail", []):
            stage = entry["stage"]
            if stage == STAGE_FORMAT_JUDGE:
                judge_fail.add((FORMAT_JUDGE_ROLE,
                                prompts.render_format_judge_prompt(entry["response"])))
            elif stage == STAGE_COT_JUDGE:
                judge_fail.add((COT_JUDGE_ROLE,
                                prompts.render_cot_judge_prompt(entry["prompt"],
                                                                entry["response"])))
            elif stage == STAGE_RM:
                rm_fail.add((entry["prompt"], entry["response"]))
            else:
                raise ConfigError(f"unknown fail stage {stage!r} in {path}")
        defaults = _judge_defaults(spec)
        default_score = float(spec.get("default_score", 0.0))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"malformed mock table {path}: {exc}") from exc

    judge = TableJudgeMock(judge_table, default=defaults, fail_keys=judge_fail)
    rm = TableRmMock(rm_table, default=default_score, fail_keys=rm_fail)
    return judge, rm


def resolve_clients(cfg: EngineConfig) -> tuple[JudgeClient, RmClient]:
    """Pick mock or HTTP clients from config; wrap both with retries."""
    backends = cfg.backends
    if backends.mock_table:
        judge, rm = load_mock_clients(backends.mock_table)
    elif backends.judge_url and backends.rm_url:
        judge = HttpJudgeClient(backends.judge_url, timeout=backends.timeout)
        rm = HttpRmClient(backends.rm_url, timeout=backends.timeout)
    else:
        raise ConfigError(
            "no backends configured: set backends.mock_table, or both "
            "backends.judge_url and backends.rm_url (or the PNS_JUDGE_URL / "
            "PNS_RM_URL environment variables)"
        )
    return (RetryingJudgeClient(judge, cfg.retry), RetryingRmClient(rm, cfg.retry))
