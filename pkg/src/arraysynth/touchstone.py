"""Touchstone v1.1 reading and writing for 1- to 4-port networks.

Line-oriented: an option line ``# <unit> S <RI|MA|DB> R <z>``, ``!``
comments, and one data block per frequency. Two-port rows use the
classical v1.1 column order S11 S21 S12 S22; three- and four-port blocks
wrap one matrix row per line. Output is written with enough digits that a
write/parse round trip is lossless well below 1e-12.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ArgumentError, ParseError
from .feednet import SParameterBlock

FREQ_UNITS = {"HZ": 1.0, "KHZ": 1e3, "MHZ": 1e6, "GHZ": 1e9}
FORMATS = ("RI", "MA", "DB")

def _fmt(v: float) -> str:
    # shortest exact representation; keeps the write/parse round trip
    # lossless (RI and frequencies exact, MA/DB at trig rounding ~1e-16)
    return repr(float(v))


@dataclass
class TouchstoneDocument:
    """Parsed file-level metadata plus the network data."""

    block: SParameterBlock
    freq_unit: str = "HZ"
    data_format: str = "RI"
    comments: list = field(default_factory=list)


def _pair_to_complex(a: float, b: float, fmt: str) -> complex:
    if fmt == "RI":
        return complex(a, b)
    if fmt == "MA":
        return a * cmath.exp(1j * math.radians(b))
    return 10.0 ** (a / 20.0) * cmath.exp(1j * math.radians(b))


def _complex_to_pair(value: complex, fmt: str) -> tuple[float, float]:
    if fmt == "RI":
        return value.real, value.imag
    mag = abs(value)
    ang = math.degrees(cmath.phase(value)) if mag > 0.0 else 0.0
    if fmt == "MA":
        return mag, ang
    db = 20.0 * math.log10(mag) if mag > 0.0 else -400.0
    return db, ang


def _parse_option_line(tokens: list[str], line_no: int) -> tuple[str, str, float]:
    unit, fmt, z_ref = "GHZ", "MA", 50.0
    i = 0
    while i < len(tokens):
        tok = tokens[i].upper()
        if tok in FREQ_UNITS:
            unit = tok
        elif tok in FORMATS:
            fmt = tok
        elif tok in ("S",):
            pass
        elif tok in ("Y", "Z", "G", "H"):
            raise ParseError(f"unsupported parameter type '{tok}'", line_no)
        elif tok == "R":
            if i + 1 >= len(tokens):
                raise ParseError("option line 'R' without a resistance", line_no)
            try:
                z_ref = float(tokens[i + 1])
            except ValueError:
                raise ParseError(
                    f"bad reference resistance '{tokens[i + 1]}'", line_no) from None
            i += 1
        else:
            raise ParseError(f"unrecognized option token '{tokens[i]}'", line_no)
        i += 1
    if z_ref <= 0.0:
        raise ParseError("reference resistance must be > 0", line_no)
    return unit, fmt, z_ref


def _infer_n_ports(counts: list[int], line_no: int) -> int:
    first = counts[0]
    if first == 3:
        return 1
    if first == 7:
        return 3
    if first == 9:
        # one 9-number line per point is a 2-port; a 4-port continues with 8s
        if len(counts) > 1 and counts[1] == 8:
            return 4
        return 2
    raise ParseError(
        f"cannot infer port count from a first data line of {first} values",
        line_no)


def _row_layout(n_ports: int) -> list[int]:
    """Expected value counts per line for one frequency block."""
    if n_ports == 1:
        return [3]
    if n_ports == 2:
        return [9]
    return [1 + 2 * n_ports] + [2 * n_ports] * (n_ports - 1)


def parse_touchstone(text: str, n_ports: int | None = None) -> SParameterBlock:
    """Parse Touchstone v1.1 text into an :class:`SParameterBlock`.

    Frequencies are converted to Hz and every data format to complex.
    ``n_ports`` is inferred from the data layout when not given (pass it
    explicitly when the file extension is known).
    """
    return parse_touchstone_document(text, n_ports).block


def parse_touchstone_document(text: str, n_ports: int | None = None) -> TouchstoneDocument:
    """Like :func:`parse_touchstone` but keeps format metadata and comments."""
    option = None
    option_line_no = None
    comments: list[str] = []
    data_lines: list[tuple[int, list[float]]] = []

    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("!"):
            comments.append(line[1:].strip())
            continue
        if "!" in line:
            line = line[:line.index("!")].strip()
            if not line:
                continue
        if line.startswith("#"):
            if option is None:
                option = _parse_option_line(line[1:].split(), line_no)
                option_line_no = line_no
            continue
        values = []
        for tok in line.split():
            try:
                values.append(float(tok))
            except ValueError:
                raise ParseError(f"non-numeric value '{tok}'", line_no) from None
        data_lines.append((line_no, values))

    if option is None:
        raise ParseError("missing '#' option line", 1)
    unit, fmt, z_ref = option
    if not data_lines:
        raise ParseError("no data rows", option_line_no)

    if n_ports is None:
        n_ports = _infer_n_ports([len(v) for _, v in data_lines], data_lines[0][0])
    if not 1 <= n_ports <= 4:
        raise ArgumentError(f"only 1-4 ports supported, got {n_ports}")

    layout = _row_layout(n_ports)
    if len(data_lines) % len(layout) != 0:
        raise ParseError(
            f"{len(data_lines)} data lines do not form complete "
            f"{len(layout)}-line blocks for a {n_ports}-port file",
            data_lines[-1][0])

    freqs: list[float] = []
    matrices: list[np.ndarray] = []
    for start in range(0, len(data_lines), len(layout)):
        numbers: list[float] = []
        for offset, expected in enumerate(layout):
            line_no, values = data_lines[start + offset]
            if len(values) != expected:
                raise ParseError(
                    f"expected {expected} values for a {n_ports}-port row, "
                    f"got {len(values)}", line_no)
            numbers.extend(values)
        freq = numbers[0] * FREQ_UNITS[unit]
        pairs = numbers[1:]
        m = np.empty((n_ports, n_ports), dtype=complex)
        if n_ports == 2:
            order = ((0, 0), (1, 0), (0, 1), (1, 1))  # S11 S21 S12 S22
        else:
            order = tuple((i, j) for i in range(n_ports) for j in range(n_ports))
        for (i, j), (a, b) in zip(order, zip(pairs[0::2], pairs[1::2])):
            m[i, j] = _pair_to_complex(a, b, fmt)
        if freqs and freq <= freqs[-1]:
            raise ParseError(
                f"frequency {freq:.6g} Hz not strictly increasing",
                data_lines[start][0])
        freqs.append(freq)
        matrices.append(m)

    block = SParameterBlock(n_ports=n_ports, freqs=np.asarray(freqs),
                            data=np.asarray(matrices), z_ref=z_ref)
    return TouchstoneDocument(block=block, freq_unit=unit, data_format=fmt,
                              comments=comments)


def write_touchstone(block: SParameterBlock, data_format: str = "RI",
                     comments: list[str] | None = None) -> str:
    """Serialize a block as Touchstone v1.1 text.

    The option line is canonical (``# Hz S <fmt> R <z>``); frequencies are
    written in Hz so the round trip is exact.
    """
    fmt = data_format.upper()
    if fmt not in FORMATS:
        raise ArgumentError(f"format must be one of {FORMATS}, got {data_format}")
    if block.n_ports > 4:
        raise ArgumentError(
            f"touchstone output supports at most 4 ports, got {block.n_ports}")
    if block.freqs.size == 0:
        raise ArgumentError("cannot write an empty frequency grid")

    lines: list[str] = []
    for comment in comments or ():
        lines.append(f"! {comment}")
    lines.append(f"# Hz S {fmt} R {_fmt(block.z_ref)}")

    n = block.n_ports
    if n == 2:
        order = ((0, 0), (1, 0), (0, 1), (1, 1))
    else:
        order = tuple((i, j) for i in range(n) for j in range(n))
    per_line = [len(order)] if n <= 2 else [n] * n

    for f, m in zip(block.freqs, block.data):
        numbers: list[float] = []
        for i, j in order:
            numbers.extend(_complex_to_pair(m[i, j], fmt))
        row = [_fmt(f)]
        pos = 0
        for count in per_line:
            chunk = numbers[2 * pos:2 * (pos + count)]
            pos += count
            row.extend(_fmt(v) for v in chunk)
            lines.append(" ".join(row))
            row = []
    return "\n".join(lines) + "\n"
