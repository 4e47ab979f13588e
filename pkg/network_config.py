"""
Reader and writer for junction network config files.

Format (UTF-8, '#' starts a comment):

    [lines]
    1 <L_T> <C_T>
    ...
    [mutual_inductance]
    <i> <j> <value>        # lower triangle, i >= j; omitted entries are 0
    [elastance]
    <i> <j> <value>
    [endpoint]
    <L> <C>                # single-line shorthand for both matrices

An upper-triangle entry is accepted when it agrees with its mirror to
1e-12 relative.
"""
import logging
import math
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np

from circuits import EndpointLCSpec, TransmissionLineSpec
from errors import AsymmetricMatrixError, ConfigError, NetworkFormatError
from reports import atomic_write
from scattering import JunctionSpec

logger = logging.getLogger("txholo.network_config")

SECTIONS = ("lines", "mutual_inductance", "elastance", "endpoint")
MATRIX_SECTIONS = ("mutual_inductance", "elastance")
SYMMETRY_RTOL = 1e-12


def _float(token: str, path: str, lineno: int) -> float:
    try:
        value = float(token)
    except ValueError:
        raise NetworkFormatError(f"not a number: {token!r}", path, lineno) from None
    if not math.isfinite(value):
        raise NetworkFormatError(f"non-finite value: {token!r}", path, lineno)
    return value


def _index(token: str, path: str, lineno: int) -> int:
    try:
        value = int(token)
    except ValueError:
        raise NetworkFormatError(f"not an index: {token!r}", path, lineno) from None
    if value < 1:
        raise NetworkFormatError(f"indices start at 1, got {value}", path, lineno)
    return value


def _read_sections(text: str, path: str) -> Dict[str, List[Tuple[int, List[str]]]]:
    sections: Dict[str, List[Tuple[int, List[str]]]] = {}
    current: Optional[str] = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            name = line[1:-1].strip().lower()
            if name not in SECTIONS:
                raise NetworkFormatError(f"unknown section [{name}]", path, lineno)
            if name in sections:
                raise NetworkFormatError(f"section [{name}] appears twice", path, lineno)
            sections[name] = []
            current = name
            continue
        if current is None:
            raise NetworkFormatError("data before the first section header", path, lineno)
        sections[current].append((lineno, line.split()))
    return sections


def _parse_lines(rows, path: str) -> List[TransmissionLineSpec]:
    by_index: Dict[int, TransmissionLineSpec] = {}
    for lineno, tokens in rows:
        if len(tokens) != 3:
            raise NetworkFormatError("expected 'i L_T C_T'", path, lineno)
        i = _index(tokens[0], path, lineno)
        if i in by_index:
            raise NetworkFormatError(f"line {i} defined twice", path, lineno)
        try:
            by_index[i] = TransmissionLineSpec(_float(tokens[1], path, lineno),
                                               _float(tokens[2], path, lineno))
        except NetworkFormatError:
            raise
        except ConfigError as exc:
            raise NetworkFormatError(str(exc), path, lineno) from None
    n = len(by_index)
    if n == 0:
        raise NetworkFormatError("[lines] section is empty", path)
    if sorted(by_index) != list(range(1, n + 1)):
        raise NetworkFormatError(f"line indices must be 1..{n}, got {sorted(by_index)}", path)
    return [by_index[i] for i in range(1, n + 1)]


def _parse_matrix(name: str, rows, n: int, path: str) -> np.ndarray:
    entries: Dict[Tuple[int, int], Tuple[float, int]] = {}
    for lineno, tokens in rows:
        if len(tokens) != 3:
            raise NetworkFormatError(f"expected 'i j value' in [{name}]", path, lineno)
        i = _index(tokens[0], path, lineno)
        j = _index(tokens[1], path, lineno)
        if i > n or j > n:
            raise NetworkFormatError(
                f"entry ({i},{j}) outside the {n}x{n} matrix in [{name}]", path, lineno)
        if (i, j) in entries:
            raise NetworkFormatError(f"entry ({i},{j}) given twice in [{name}]", path, lineno)
        entries[(i, j)] = (_float(tokens[2], path, lineno), lineno)

    matrix = np.zeros((n, n))
    for (i, j), (value, lineno) in entries.items():
        mirror = entries.get((j, i))
        if mirror is not None and i != j:
            other = mirror[0]
            delta = abs(value - other)
            if delta > SYMMETRY_RTOL * max(abs(value), abs(other)):
                lo, hi = sorted((i, j))
                raise AsymmetricMatrixError(f"{path}: {name}", (lo, hi), delta)
        if i >= j:
            matrix[i - 1, j - 1] = value
            matrix[j - 1, i - 1] = value
        elif mirror is None:
            matrix[i - 1, j - 1] = value
            matrix[j - 1, i - 1] = value
    return matrix


def parse_network_text(text: str, path: str = "<network>", hbar: float = 1.0) -> JunctionSpec:
    sections = _read_sections(text, path)
    if "lines" not in sections:
        raise NetworkFormatError("missing [lines] section", path)
    lines = _parse_lines(sections["lines"], path)
    n = len(lines)

    has_matrices = any(name in sections for name in MATRIX_SECTIONS)
    if "endpoint" in sections:
        rows = sections["endpoint"]
        if has_matrices:
            raise NetworkFormatError("[endpoint] cannot be combined with coupling matrices", path)
        if n != 1:
            raise NetworkFormatError(f"[endpoint] needs exactly one line, got {n}", path)
        if len(rows) != 1 or len(rows[0][1]) != 2:
            lineno = rows[0][0] if rows else None
            raise NetworkFormatError("[endpoint] expects one 'L C' row", path, lineno)
        lineno, tokens = rows[0]
        try:
            endpoint = EndpointLCSpec(_float(tokens[0], path, lineno),
                                      _float(tokens[1], path, lineno))
        except NetworkFormatError:
            raise
        except ConfigError as exc:
            raise NetworkFormatError(str(exc), path, lineno) from None
        return JunctionSpec.single_endpoint(endpoint, lines[0], hbar=hbar)

    missing = [name for name in MATRIX_SECTIONS if name not in sections]
    if missing:
        raise NetworkFormatError(f"missing section(s) {', '.join('[' + m + ']' for m in missing)}", path)
    mutual = _parse_matrix("mutual_inductance", sections["mutual_inductance"], n, path)
    elastance = _parse_matrix("elastance", sections["elastance"], n, path)
    spec = JunctionSpec(tuple(lines), mutual, elastance, hbar=hbar)
    logger.info("parsed %d-line network from %s", n, path)
    return spec


def parse_network(path: Union[str, Path], hbar: float = 1.0) -> JunctionSpec:
    """Read a junction from a network config file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ConfigError(f"network file not found: {path}") from None
    except UnicodeDecodeError as exc:
        raise NetworkFormatError(f"not UTF-8 text ({exc.reason})", str(path)) from None
    return parse_network_text(text, str(path), hbar=hbar)


def emit_network(spec: JunctionSpec, path: Union[str, Path, None] = None) -> str:
    """
    Serialize a junction; values use repr() so parsing the output gives
    back an equal JunctionSpec.
    """
    out = ["[lines]"]
    for i, line in enumerate(spec.lines, start=1):
        out.append(f"{i} {line.inductance_per_length!r} {line.capacitance_per_length!r}")
    for name in MATRIX_SECTIONS:
        matrix = getattr(spec, name)
        out.append("")
        out.append(f"[{name}]")
        for i in range(spec.size):
            for j in range(i + 1):
                out.append(f"{i + 1} {j + 1} {float(matrix[i, j])!r}")
    text = "\n".join(out) + "\n"
    if path is not None:
        atomic_write(Path(path), text)
    return text
