"""Sparse SDPA text interchange for the conic programs.

The exported file encodes the program as the SDPA *dual*
``max <F_0, Y>  s.t.  <F_r, Y> = c_r,  Y >= 0 block-diagonal`` with three
blocks:

  block 1  the PSD matrix variable G (order ``psd_dim``)
  block 2  a diagonal block of slack variables, one per inequality row
  block 3  a diagonal block of paired nonnegative scalars (p, q) encoding
           every free scalar as f = p - q

so the file's optimal objective equals the program's optimum.  Diagonal
blocks carry negative sizes per the format convention; only upper
triangles are written.  ``import_sdpa`` inverts ``export_sdpa`` exactly;
``parse_sdpa`` reads any well-formed SDPA sparse file into raw block data.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .conic import ConicProgram, ConicRow

__all__ = ["SdpaData", "SdpaParseError", "export_sdpa", "import_sdpa", "parse_sdpa"]


class SdpaParseError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


@dataclass
class SdpaData:
    """Raw contents of an SDPA sparse file: block sizes, rhs, and entries."""

    m: int
    block_sizes: list[int]                   # negative = diagonal block
    c: np.ndarray                            # length m
    entries: list[tuple[int, int, int, int, float]] = field(default_factory=list)
    # (matno 0..m, block 1-based, i 1-based, j 1-based, value); upper triangle only

    def matrices(self) -> list[list[np.ndarray]]:
        """Dense per-matrix per-block realizations (symmetrized)."""
        out = []
        for _ in range(self.m + 1):
            out.append([np.zeros((abs(sz), abs(sz))) for sz in self.block_sizes])
        for matno, blk, i, j, v in self.entries:
            M = out[matno][blk - 1]
            M[i - 1, j - 1] = v
            M[j - 1, i - 1] = v
        return out


def _fmt(v: float) -> str:
    return f"{v:.17g}"


def export_sdpa(cp: ConicProgram) -> str:
    """Serialize a conic program to SDPA sparse text."""
    m = len(cp.rows)
    nf = cp.n_free
    blocks = [cp.psd_dim, -m, -2 * nf]
    lines = ["* conic worst-case program; blocks: [psd G, ineq slacks, free p-q split]"]
    lines.append(f"{m}")
    lines.append(f"{len(blocks)}")
    lines.append(" ".join(str(b) for b in blocks))
    lines.append(" ".join(_fmt(row.rhs) for row in cp.rows))

    def emit(matno: int, AG: np.ndarray, af: np.ndarray, slack: int | None):
        out = []
        for p in range(cp.psd_dim):
            for q in range(p, cp.psd_dim):
                v = AG[p, q]
                if v != 0.0:
                    out.append(f"{matno} 1 {p + 1} {q + 1} {_fmt(v)}")
        if slack is not None:
            out.append(f"{matno} 2 {slack} {slack} 1")
        for k in range(nf):
            v = af[k]
            if v != 0.0:
                out.append(f"{matno} 3 {k + 1} {k + 1} {_fmt(v)}")
                out.append(f"{matno} 3 {nf + k + 1} {nf + k + 1} {_fmt(-v)}")
        return out

    lines.extend(emit(0, cp.obj_G, cp.obj_f, None))
    for r, row in enumerate(cp.rows, start=1):
        lines.extend(emit(r, row.AG, row.af, r))
    return "\n".join(lines) + "\n"


def parse_sdpa(text: str) -> SdpaData:
    """Parse SDPA sparse text into raw block data.

    Accepts comment lines starting with ``*`` or ``"`` and the usual
    brace/comma decorations on the block-size line.  Reports the offending
    line number on malformed input.
    """
    lines = text.splitlines()
    idx = 0

    def next_data_line():
        nonlocal idx
        while idx < len(lines):
            raw = lines[idx]
            idx += 1
            stripped = raw.strip()
            if stripped and not stripped.startswith(("*", '"')):
                return stripped, idx
        raise SdpaParseError("unexpected end of file", len(lines))

    line, no = next_data_line()
    try:
        m = int(line.split()[0])
    except (ValueError, IndexError):
        raise SdpaParseError(f"expected constraint count, got {line!r}", no)
    line, no = next_data_line()
    try:
        nblocks = int(line.split()[0])
    except (ValueError, IndexError):
        raise SdpaParseError(f"expected block count, got {line!r}", no)
    line, no = next_data_line()
    cleaned = line.replace("{", " ").replace("}", " ").replace("(", " ") \
                  .replace(")", " ").replace(",", " ")
    try:
        sizes = [int(tok) for tok in cleaned.split()]
    except ValueError:
        raise SdpaParseError(f"bad block size line {line!r}", no)
    if len(sizes) != nblocks:
        raise SdpaParseError(f"expected {nblocks} block sizes, found {len(sizes)}", no)
    cvals: list[float] = []
    while len(cvals) < m:
        line, no = next_data_line()
        cleaned = line.replace("{", " ").replace("}", " ").replace(",", " ")
        try:
            cvals.extend(float(tok) for tok in cleaned.split())
        except ValueError:
            raise SdpaParseError(f"bad objective value line {line!r}", no)
    if len(cvals) != m:
        raise SdpaParseError(f"expected {m} objective values, found {len(cvals)}", no)

    entries = []
    while idx < len(lines):
        raw = lines[idx]
        idx += 1
        stripped = raw.strip()
        if not stripped or stripped.startswith(("*", '"')):
            continue
        toks = stripped.replace(",", " ").split()
        if len(toks) != 5:
            raise SdpaParseError(f"expected 5 fields, got {len(toks)}", idx)
        try:
            matno, blk, i, j = (int(t) for t in toks[:4])
            val = float(toks[4])
        except ValueError:
            raise SdpaParseError(f"bad entry {stripped!r}", idx)
        if not (0 <= matno <= m):
            raise SdpaParseError(f"matrix number {matno} out of range", idx)
        if not (1 <= blk <= nblocks):
            raise SdpaParseError(f"block number {blk} out of range", idx)
        sz = abs(sizes[blk - 1])
        if not (1 <= i <= sz and 1 <= j <= sz):
            raise SdpaParseError(f"index ({i},{j}) outside block of size {sz}", idx)
        if sizes[blk - 1] < 0 and i != j:
            raise SdpaParseError("off-diagonal entry in a diagonal block", idx)
        if i > j:
            i, j = j, i
        entries.append((matno, blk, i, j, val))
    return SdpaData(m=m, block_sizes=sizes, c=np.asarray(cvals), entries=entries)


def import_sdpa(text: str) -> ConicProgram:
    """Rebuild a conic program from text produced by :func:`export_sdpa`.

    Requires the three-block layout documented in this module; the slack
    block pins down row identity so the reconstruction is exact.
    """
    data = parse_sdpa(text)
    if len(data.block_sizes) != 3 or data.block_sizes[0] <= 0 \
            or data.block_sizes[1] != -data.m or data.block_sizes[2] >= 0 \
            or data.block_sizes[2] % 2 != 0:
        raise SdpaParseError(f"unexpected block layout {data.block_sizes}; "
                             "expected [psd, -m, -2*n_free]")
    psd_dim = data.block_sizes[0]
    n_free = -data.block_sizes[2] // 2
    mats = data.matrices()
    obj_G = mats[0][0]
    obj_f = np.diagonal(mats[0][2])[:n_free].copy()
    rows = []
    for r in range(1, data.m + 1):
        slack = np.diagonal(mats[r][1])
        if abs(slack[r - 1] - 1.0) > 0 or np.count_nonzero(slack) != 1:
            raise SdpaParseError(f"constraint {r} lacks its unit slack entry")
        af_p = np.diagonal(mats[r][2])[:n_free]
        af_q = np.diagonal(mats[r][2])[n_free:]
        if not np.array_equal(af_p, -af_q):
            raise SdpaParseError(f"constraint {r}: free-variable split is not paired")
        rows.append(ConicRow(af=af_p.copy(), AG=mats[r][0], rhs=float(data.c[r - 1]),
                             tag=("imported", r - 1)))
    return ConicProgram(psd_dim=psd_dim, n_free=n_free, obj_f=obj_f, obj_G=obj_G,
                        rows=rows)
