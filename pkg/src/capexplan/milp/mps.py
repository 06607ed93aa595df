"""Fixed-form MPS export for cross-checking models with external solvers.

Classical fixed-form MPS is a minimization format with 8-character names,
so maximization models are written with negated objective coefficients (a
leading comment says so) and long variable/constraint names are replaced by
generated short ids with a legend appended as comments.
"""

from __future__ import annotations

import math
import re
from typing import Dict, TextIO

from .model import EQUAL, GREATER, LESS, MilpModel

_ROW_TYPE = {LESS: "L", EQUAL: "E", GREATER: "G"}
_NAME_RE = re.compile(r"^[A-Za-z][A-Za-z0-9_]{0,7}$")


def _short_names(originals, prefix) -> Dict[str, str]:
    used = set()
    out = {}
    for i, name in enumerate(originals):
        candidate = name if _NAME_RE.match(name) else f"{prefix}{i:07d}"
        if candidate in used:
            candidate = f"{prefix}{i:07d}"
        used.add(candidate)
        out[name] = candidate
    return out


def _num(value: float) -> str:
    return f"{value:.6G}"


def _entry(field2: str, field3: str, field4: str = "", field5: str = "", field6: str = "") -> str:
    # classical field columns: 2-3, 5-12, 15-22, 25-36, 40-47, 50-61
    line = f" {field2:<2} {field3:<8}  {field4:<12}"
    if field5:
        line = f"{line}   {field5:<8}  {field6:<12}"
    return line.rstrip()


def write_mps(model: MilpModel, stream: TextIO) -> None:
    obj_sign = -1.0 if model.sense == "maximize" else 1.0
    var_map = _short_names((v.name for v in model.variables), "X")
    row_map = _short_names((c.name for c in model.constraints), "R")

    w = lambda line: stream.write(line + "\n")
    if model.sense == "maximize":
        w("* maximization model: objective coefficients negated for MPS")
    w(f"NAME          {model.name[:8].upper() or 'MODEL'}")
    w("ROWS")
    w(" N  OBJ")
    for con in model.constraints:
        w(f" {_ROW_TYPE[con.sense]}  {row_map[con.name]}")

    w("COLUMNS")
    marker = 0
    in_integer = False
    for var in model.variables:
        if var.integer != in_integer:
            kind = "'INTORG'" if var.integer else "'INTEND'"
            w(f"    MARKER{marker:02d}                 'MARKER'                 {kind}")
            marker += 1
            in_integer = var.integer
        short = var_map[var.name]
        if var.objective:
            w(f"    {short:<8}  OBJ       {_num(obj_sign * var.objective):<12}")
        for con in model.constraints:
            coeff = con.coeffs.get(var.name)
            if coeff:
                w(f"    {short:<8}  {row_map[con.name]:<8}  {_num(coeff):<12}")
    if in_integer:
        w(f"    MARKER{marker:02d}                 'MARKER'                 'INTEND'")

    w("RHS")
    for con in model.constraints:
        if con.rhs:
            w(f"    RHS       {row_map[con.name]:<8}  {_num(con.rhs):<12}")

    w("BOUNDS")
    for var in model.variables:
        short = var_map[var.name]
        lo, up = var.lower, var.upper
        if lo == up:
            w(f" FX BND       {short:<8}  {_num(lo):<12}")
            continue
        if math.isinf(lo) and math.isinf(up):
            w(f" FR BND       {short:<8}")
            continue
        if math.isinf(lo):
            w(f" MI BND       {short:<8}")
        elif lo != 0.0 or var.integer:
            w(f" LO BND       {short:<8}  {_num(lo):<12}")
        if not math.isinf(up):
            w(f" UP BND       {short:<8}  {_num(up):<12}")
    w("ENDATA")

    renamed_vars = [(o, s) for o, s in var_map.items() if o != s]
    renamed_rows = [(o, s) for o, s in row_map.items() if o != s]
    if renamed_vars or renamed_rows:
        w("* name legend (original -> mps id)")
        for original, short in renamed_vars + renamed_rows:
            w(f"* {short} = {original}")


def export_mps(model: MilpModel, path: str) -> None:
    with open(path, "w") as handle:
        write_mps(model, handle)
