"""Benchmark aggregation: per-run summaries to a comparison CSV and text table."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field, asdict
from pathlib import Path

BASELINE = "tsmixer"
VARIANT_ORDER = ("tskanmixer_v01", "tskanmixer_v02", "tsmixer")


def compute_delta_pct(baseline: float, candidate: float) -> float:
    """Percentage improvement of ``candidate`` over ``baseline`` (positive = lower error)."""
    if baseline == 0:
        raise ZeroDivisionError("baseline error is zero; percentage change undefined")
    return 100.0 * (baseline - candidate) / baseline


@dataclass
class ReportRow:
    dataset: str
    variant: str
    status: str = "ok"
    mse: float | None = None
    mae: float | None = None
    delta_mse_pct: float | None = None
    delta_mae_pct: float | None = None
    best_epoch: int | None = None
    epochs: int | None = None
    time_per_epoch: float | None = None
    wall_seconds: float | None = None
    seed: int | None = None


@dataclass
class BenchmarkReport:
    rows: list[ReportRow] = field(default_factory=list)

    CSV_FIELDS = [f for f in ReportRow.__dataclass_fields__]

    @classmethod
    def from_summaries(cls, summaries: list[dict]) -> "BenchmarkReport":
        """Build from run summaries (``dataset, variant, status, test_mse, test_mae, ...``).

        Deltas are filled only for datasets that have a successful tsmixer run.
        """
        rows = []
        for s in summaries:
            ok = s.get("status", "ok") == "ok"
            rows.append(ReportRow(
                dataset=s["dataset"], variant=s["variant"], status=s.get("status", "ok"),
                mse=s.get("test_mse") if ok else None, mae=s.get("test_mae") if ok else None,
                best_epoch=s.get("best_epoch"), epochs=s.get("epochs"),
                time_per_epoch=s.get("time_per_epoch"), wall_seconds=s.get("wall_seconds"),
                seed=s.get("seed"),
            ))
        base = {r.dataset: r for r in rows if r.variant == BASELINE and r.status == "ok"}
        for r in rows:
            b = base.get(r.dataset)
            if b is None or r.status != "ok" or r is b:
                continue
            r.delta_mse_pct = compute_delta_pct(b.mse, r.mse)
            r.delta_mae_pct = compute_delta_pct(b.mae, r.mae)
        return cls(rows)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=self.CSV_FIELDS, lineterminator="\n")
        w.writeheader()
        for r in self.rows:
            w.writerow({k: ("" if v is None else (repr(v) if isinstance(v, float) else v))
                        for k, v in asdict(r).items()})
        return buf.getvalue()

    def render_text(self) -> str:
        """Aligned plain-text table; per dataset and metric the best value is
        marked ``**`` and the next two ``*``."""
        marks = {}
        for ds in dict.fromkeys(r.dataset for r in self.rows):
            ok = [r for r in self.rows if r.dataset == ds and r.status == "ok"]
            for metric in ("mse", "mae"):
                ranked = sorted(ok, key=lambda r: getattr(r, metric))
                for pos, r in enumerate(ranked[:3]):
                    marks[(id(r), metric)] = "**" if pos == 0 else "*"

        def cell(r, metric):
            v = getattr(r, metric)
            if v is None:
                return "-"
            s = f"{v:.3f}{marks.get((id(r), metric), '')}"
            d = getattr(r, f"delta_{metric}_pct")
            return s + (f" ({d:.2f}%)" if d is not None else "")

        def num(v, fmt):
            return "-" if v is None else format(v, fmt)

        header = ["dataset", "variant", "MSE (d%)", "MAE (d%)", "best_epoch", "epochs", "sec/epoch", "train sec", "status"]
        lines = [header]
        order = {v: i for i, v in enumerate(VARIANT_ORDER)}
        datasets = list(dict.fromkeys(r.dataset for r in self.rows))
        for ds in datasets:
            for r in sorted((r for r in self.rows if r.dataset == ds), key=lambda r: order.get(r.variant, 99)):
                lines.append([r.dataset, r.variant, cell(r, "mse"), cell(r, "mae"),
                              num(r.best_epoch, "d"), num(r.epochs, "d"),
                              num(r.time_per_epoch, ".2f"), num(r.wall_seconds, ".2f"), r.status])
        widths = [max(len(row[i]) for row in lines) for i in range(len(header))]
        out = ["  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip() for row in lines]
        out.insert(1, "  ".join("-" * w for w in widths))
        out.append("")
        out.append("** best, * top three within dataset; d% = improvement over tsmixer")
        return "\n".join(out) + "\n"

    def write(self, out_dir):
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "report.csv").write_text(self.to_csv(), encoding="utf-8")
        (out_dir / "report.txt").write_text(self.render_text(), encoding="utf-8")


def load_summaries(paths) -> list[dict]:
    return [json.loads(Path(p).read_text(encoding="utf-8")) for p in paths]
