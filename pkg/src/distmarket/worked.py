"""Executable documentation.

docs/worked_examples.md holds worked clearings. Each example is a level-2
heading, a ```json case block (or a ```case block containing the word
``embedded``), and an ```expect block: a JSON object of expected values with
a ``provenance`` note and a ``tolerance``. run_examples clears every example
and diffs it against its expectations.

docs/case_format.md is checked too: each ```json block must parse as a
valid case and each ```json-invalid block must be rejected.
"""
from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

from .caseio import embedded_case, parse_case
from .clearing import clear_horizon, clear_hour
from .errors import DmoError
from .model import MarketCase
from .settlement import settle

DOCS_DIR = Path(__file__).resolve().parents[2] / "docs"
_FENCE = re.compile(r"^```([\w-]*)\n(.*?)^```", re.S | re.M)
_HEADING = re.compile(r"^## (.+)$", re.M)
_EXPECT_KEYS = {
    "hour", "tolerance", "provenance", "dlmp", "allocations", "line_shadow", "binding_lines",
    "welfare", "benefit", "grid_power", "flows", "settlement",
}


@dataclass(frozen=True)
class WorkedExample:
    title: str
    case_text: str
    expected: dict
    notes: str = ""

    def case(self) -> MarketCase:
        if self.case_text.strip() == "embedded":
            return embedded_case()
        return parse_case(self.case_text)

    @property
    def provenance(self) -> str:
        return self.expected.get("provenance", "")


@dataclass
class ExampleOutcome:
    title: str
    passed: bool
    failures: list[str] = field(default_factory=list)

    def __str__(self):
        status = "pass" if self.passed else "FAIL"
        extra = "".join(f"\n    {f}" for f in self.failures)
        return f"{status}  {self.title}{extra}"


def _blocks(text: str):
    return [(m.group(1), m.group(2), m.start()) for m in _FENCE.finditer(text)]


def load_examples(path: Path) -> list[WorkedExample]:
    text = Path(path).read_text()
    heads = [(m.start(), m.group(1).strip()) for m in _HEADING.finditer(text)]
    examples = []
    for i, (start, title) in enumerate(heads):
        end = heads[i + 1][0] if i + 1 < len(heads) else len(text)
        section = text[start:end]
        blocks = _blocks(section)
        cases = [body for lang, body, _ in blocks if lang in ("json", "case")]
        expects = [body for lang, body, _ in blocks if lang == "expect"]
        if not cases and not expects:
            continue
        if len(cases) != 1 or len(expects) != 1:
            raise ValueError(f"{path}: section {title!r} needs exactly one case block and one expect block")
        notes = _FENCE.sub("", section.split("\n", 1)[1]).strip()
        examples.append(WorkedExample(title, cases[0], json.loads(expects[0]), notes))
    return examples


def _close(a: float, b: float, tol: float) -> bool:
    return math.isclose(a, b, rel_tol=0.0, abs_tol=tol * (1 + abs(b)))


def _compare(label: str, got: Any, want: Any, tol: float, failures: list[str]):
    if isinstance(want, dict):
        for k, v in want.items():
            key = int(k) if k.lstrip("-").isdigit() else k
            if key not in got:
                failures.append(f"{label}[{k}] missing")
                continue
            _compare(f"{label}[{k}]", got[key], v, tol, failures)
    elif isinstance(want, list):
        if len(got) != len(want):
            failures.append(f"{label}: expected {len(want)} entries, got {len(got)}")
            return
        for i, (g, w) in enumerate(zip(got, want)):
            _compare(f"{label}[{i}]", g, w, tol, failures)
    elif not _close(float(got), float(want), tol):
        failures.append(f"{label}: expected {want}, got {got}")


def check_example(example: WorkedExample) -> ExampleOutcome:
    exp = example.expected
    failures: list[str] = []
    unknown = set(exp) - _EXPECT_KEYS
    if unknown:
        failures.append(f"unknown expectation keys {sorted(unknown)}")
    if not re.match(r"\[(TRIVIAL|DERIVED)", example.provenance):
        failures.append("expectation lacks a [TRIVIAL]/[DERIVED] provenance note")
    tol = float(exp.get("tolerance", 1e-9))
    try:
        case = example.case()
        hour = int(exp.get("hour", 0))
        res = clear_hour(case, hour)
        got = {
            "dlmp": res.dlmp,
            "allocations": {b: list(a) for b, a in res.allocations.items()},
            "line_shadow": res.line_shadow,
            "welfare": res.welfare,
            "benefit": res.benefit,
            "grid_power": res.grid_power,
            "flows": res.flows,
        }
        for key, value in got.items():
            if key in exp:
                _compare(key, value, exp[key], tol, failures)
        if "binding_lines" in exp and res.congested_lines() != sorted(exp["binding_lines"]):
            failures.append(f"binding_lines: expected {sorted(exp['binding_lines'])}, got {res.congested_lines()}")
        if "settlement" in exp:
            st = settle(clear_horizon(case), case)
            got_st = {
                "customer_payment": st.total_customer_payment,
                "utility_payment": st.utility_payment,
                "surplus": st.surplus,
            }
            _compare("settlement", got_st, exp["settlement"], tol, failures)
    except DmoError as exc:
        failures.append(f"engine raised {type(exc).__name__}: {exc}")
    return ExampleOutcome(example.title, not failures, failures)


def check_schema_snippets(path: Path) -> list[ExampleOutcome]:
    out = []
    for i, (lang, body, _) in enumerate(_blocks(Path(path).read_text())):
        if lang not in ("json", "json-invalid"):
            continue
        title = f"{Path(path).name} snippet {i + 1}"
        try:
            parse_case(body)
            ok = lang == "json"
            msg = [] if ok else ["snippet marked invalid was accepted"]
        except DmoError as exc:
            ok = lang == "json-invalid"
            msg = [] if ok else [f"{type(exc).__name__}: {exc}"]
        out.append(ExampleOutcome(title, ok, msg))
    return out


def run_examples(docs_dir: Optional[Path] = None) -> list[ExampleOutcome]:
    """Pass/fail for every worked example and every schema snippet."""
    docs = Path(docs_dir) if docs_dir else DOCS_DIR
    outcomes = [check_example(ex) for ex in load_examples(docs / "worked_examples.md")]
    outcomes += check_schema_snippets(docs / "case_format.md")
    return outcomes


if __name__ == "__main__":
    import sys

    results = run_examples(Path(sys.argv[1]) if len(sys.argv) > 1 else None)
    for r in results:
        print(r)
    sys.exit(0 if all(r.passed for r in results) else 1)
