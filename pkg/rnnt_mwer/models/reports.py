"""Report models printed by the commands and written with --json-out."""

from pydantic import BaseModel


class WerReport(BaseModel):
    """Corpus-level error breakdown."""

    num_utterances: int
    substitutions: int
    insertions: int
    deletions: int
    total_errors: int
    ref_count: int
    wer: float
    baseline_wer: float | None = None
    normalized_wer: float | None = None

    def table(self) -> str:
        rows = [
            ("utterances", str(self.num_utterances)),
            ("reference tokens", str(self.ref_count)),
            ("substitutions", str(self.substitutions)),
            ("insertions", str(self.insertions)),
            ("deletions", str(self.deletions)),
            ("errors", str(self.total_errors)),
            ("WER", f"{self.wer:.4f}"),
        ]
        if self.normalized_wer is not None:
            rows.append(("normalized WER", f"{self.normalized_wer:.3f}"))
        width = max(len(name) for name, _ in rows)
        return "\n".join(f"{name:<{width}}  {value}" for name, value in rows)


class GradcheckResult(BaseModel):
    """One finite-difference suite."""

    suite: str
    instances: int
    max_relative_error: float
    tolerance: float
    passed: bool


class GradcheckReport(BaseModel):
    results: list[GradcheckResult]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def table(self) -> str:
        lines = [f"{'suite':<16}{'instances':>10}{'max rel err':>14}{'tol':>10}  status"]
        for r in self.results:
            status = "ok" if r.passed else "FAIL"
            lines.append(
                f"{r.suite:<16}{r.instances:>10}{r.max_relative_error:>14.3e}{r.tolerance:>10.0e}  {status}"
            )
        return "\n".join(lines)


class TrainingSummary(BaseModel):
    """End-of-run numbers for the training commands."""

    mode: str
    steps: int
    final_loss: float | None = None
    dev_expected_errors: list[float] = []
    dev_wer: list[float] = []
    skipped_utterances: int = 0
    checkpoint: str | None = None

    def table(self) -> str:
        lines = [f"mode: {self.mode}", f"steps: {self.steps}"]
        if self.final_loss is not None:
            lines.append(f"final loss: {self.final_loss:.4f}")
        if self.dev_wer:
            lines.append(f"dev WER: {self.dev_wer[0]:.4f} -> {self.dev_wer[-1]:.4f}")
        if self.dev_expected_errors:
            lines.append(
                f"dev expected errors: {self.dev_expected_errors[0]:.4f} -> {self.dev_expected_errors[-1]:.4f}"
            )
        if self.skipped_utterances:
            lines.append(f"skipped: {self.skipped_utterances}")
        if self.checkpoint:
            lines.append(f"checkpoint: {self.checkpoint}")
        return "\n".join(lines)


class DecodeBenchmark(BaseModel):
    """Decode-phase wall clock per worker count."""

    utterances: int
    seconds_by_workers: dict[int, float]
    identical_output: bool

    def table(self) -> str:
        base = self.seconds_by_workers[min(self.seconds_by_workers)]
        lines = [f"{'workers':>8}{'seconds':>10}{'speedup':>9}"]
        for w, s in sorted(self.seconds_by_workers.items()):
            lines.append(f"{w:>8}{s:>10.2f}{base / max(s, 1e-9):>9.2f}")
        return "\n".join(lines)


class SynthSummary(BaseModel):
    out_dir: str
    vocab_size: int
    eos: bool
    train: int
    dev: int
    test: int

    def table(self) -> str:
        return f"{self.out_dir}: {self.train} train, {self.dev} dev, {self.test} test utterances"


class RescoreResult(BaseModel):
    lm_weight: float | None
    wer: WerReport


class RescoreReport(BaseModel):
    """Top-1 WER before rescoring and after each rescoring pass."""

    method: str
    baseline: WerReport
    results: list[RescoreResult]

    def table(self) -> str:
        lines = [f"{'pass':<18}{'WER':>8}{'normalized':>12}"]
        lines.append(f"{'decoder':<18}{self.baseline.wer:>8.4f}{1.0:>12.3f}")
        for r in self.results:
            name = self.method if r.lm_weight is None else f"{self.method} l={r.lm_weight:g}"
            norm = r.wer.normalized_wer if r.wer.normalized_wer is not None else float("nan")
            lines.append(f"{name:<18}{r.wer.wer:>8.4f}{norm:>12.3f}")
        return "\n".join(lines)


class LMSummary(BaseModel):
    name: str
    sentences: int
    vocabulary_size: int
    path: str

    def table(self) -> str:
        return f"{self.name} over {self.vocabulary_size} words from {self.sentences} sentences -> {self.path}"
