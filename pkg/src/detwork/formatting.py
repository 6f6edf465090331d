"""Number formatting and atomic output of CSV or key/value text."""
from __future__ import annotations

import csv
import io
import math
import os
import sys
import tempfile
from decimal import Decimal, localcontext
from fractions import Fraction
from typing import Iterable, Sequence

SIG_DIGITS = 20


def fmt_rational(x) -> str:
    if x is None:
        return ""
    return str(Fraction(x))


def fmt_decimal(x, digits: int = SIG_DIGITS) -> str:
    """Round to ``digits`` significant digits and print without an exponent."""
    if x is None:
        return ""
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
    with localcontext() as ctx:
        ctx.prec = digits
        if isinstance(x, Fraction):
            d = Decimal(x.numerator) / Decimal(x.denominator)
        else:
            d = +Decimal(x)
    if d == 0:
        return "0"
    return format(d, "f")


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(row)
    return buf.getvalue()


def kv_text(pairs: Iterable[tuple[str, object]]) -> str:
    lines = []
    for key, value in pairs:
        lines.append(f"{key}={'' if value is None else value}")
    return "\n".join(lines) + "\n"


def emit(text: str, path: str | None) -> None:
    """Write to ``path`` through a temporary file and an atomic rename, or to stdout."""
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
