"""Markdown / CSV / JSON rendering of the count tables and the errata report."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass

from . import cost
from .cost import DIMS


@dataclass
class Table:
    key: str
    title: str
    headers: list
    rows: list

    def as_records(self) -> list[dict]:
        return [dict(zip(self.headers, r)) for r in self.rows]


def table1() -> Table:
    rows = []
    for label, attr in (("(n-1)-qudit gates", "gates"), ("controlled diagonals", "diagonals"),
                        ("rotation sets", "rotation_sets")):
        rows.append([label] + [getattr(cost.component_counts(d), attr) for d in DIMS])
    return Table("table1", "Component counts per recursion level", ["component"] + [f"d={d}" for d in DIMS], rows)


def table2() -> Table:
    flagged = {(e.d, e.n): e.kind for e in cost.errata_report()}
    rows = []
    for n in range(2, 9):
        for d in DIMS:
            printed = cost.TABLE2_PRINTED[(d, n)]
            model = cost.model_gcx_count(d, n)
            status = f"erratum:{flagged[(d, n)]}" if (d, n) in flagged else "ok"
            rows.append([d, n, cost.TABLE2_BEFORE[(d, n)].text, printed.text, model, status])
    return Table("table2", "Optimized GCX counts: model vs printed",
                 ["d", "n", "printed_before", "printed_after", "model", "status"], rows)


def table3() -> Table:
    rows = []
    for d in DIMS:
        a = cost.asymptotic_index(d)
        printed = cost.TABLE3_PRINTED[d]
        status = "ok" if abs(a.at_n8 - printed) <= 0.01 else "discrepancy"
        rows.append([d, printed, round(a.at_n8, 4), str(a.limit), round(a.limit_float, 4), status])
    return Table("table3", "Asymptotic efficiency index",
                 ["d", "printed", "R_at_n8", "limit_exact", "limit", "status"], rows)


def table4() -> Table:
    rows = [[n] + [cost.TABLE4_PRINTED[(d, n)].text for d in DIMS] for n in range(2, 9)]
    return Table("table4", "CINC counts, balanced-partition CSD (reference data)",
                 ["n"] + [f"d={d}" for d in DIMS], rows)


def table5() -> Table:
    rows = []
    for n, cell in cost.TABLE5_PRINTED.items():
        v = cost.comparison_counts("cdnot", n)
        rows.append([n, cell.text, v, "ok" if cell.matches(v) else "mismatch"])
    r = cost.closed_form_r_asy("cdnot")
    rows.append(["R_asy", f"{cost.TABLE5_R_ASY:.2f}", round(r, 4),
                 "ok" if round(r, 2) == cost.TABLE5_R_ASY else "mismatch"])
    return Table("table5", "Ququart CDNOT counts", ["n", "printed", "formula", "status"], rows)


def table6() -> Table:
    rows = []
    for kind, printed in cost.TABLE6_PRINTED.items():
        vals = [cost.comparison_counts(kind, n) for n in range(2, 7)]
        r = cost.closed_form_r_asy(kind)
        ok = list(printed) == vals and round(r, 2) == cost.TABLE6_R_ASY[kind]
        rows.append([kind] + vals + [round(r, 4), "ok" if ok else "mismatch"])
    return Table("table6", "Qubit CNOT counts", ["method"] + [f"n={n}" for n in range(2, 7)] + ["R_asy", "status"],
                 rows)


def all_tables() -> list[Table]:
    return [table1(), table2(), table3(), table4(), table5(), table6()]


def render(fmt: str = "md") -> str:
    tables = all_tables()
    errata = [e.as_dict() for e in cost.errata_report()]
    if fmt == "json":
        doc = {"schema": 1, "tables": {t.key: {"title": t.title, "rows": t.as_records()} for t in tables},
               "errata": errata}
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        for t in tables:
            w.writerow([f"# {t.key}: {t.title}"])
            w.writerow(t.headers)
            w.writerows(t.rows)
            w.writerow([])
        return buf.getvalue()
    if fmt == "md":
        parts = []
        for t in tables:
            parts.append(f"## {t.title}\n")
            parts.append("| " + " | ".join(map(str, t.headers)) + " |")
            parts.append("|" + "---|" * len(t.headers))
            parts += ["| " + " | ".join(map(str, r)) + " |" for r in t.rows]
            parts.append("")
        parts.append("## Errata\n")
        for e in errata:
            parts.append(f"- ({e['d']},{e['n']}) printed {e['printed']}, recurrence {e['recurrence']} [{e['kind']}]")
            parts += [f"  - {x}" for x in e["evidence"]]
        return "\n".join(parts) + "\n"
    raise ValueError(f"unknown format {fmt!r}")
