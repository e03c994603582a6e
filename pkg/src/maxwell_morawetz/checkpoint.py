"""Checkpoint files for multi-mode states.

Layout::

    MAXMOR-CHECKPOINT 1          (ASCII header, one ``key value`` pair per line)
    endian little
    dtype complex128
    mass <float repr>
    r_star_min <float repr>
    r_star_max <float repr>
    n_points <int>
    max_horizon_lapse <float repr>
    t <float repr>
    modes <K>
    mode <l> <m>                 (K lines, in payload order)
    END
    <payload>

The payload follows the newline after ``END`` directly.  For each mode, in
header order, it holds phi0, phi1 and phi2 as ``n_points`` complex128 values
each (real and imaginary parts interleaved) in the declared byte order, so a
file is ``len(header) + 48 * K * n_points`` bytes long.
"""

from __future__ import annotations

import sys
from pathlib import Path
from typing import List, Sequence, Union

import numpy as np

from .background import BackgroundModel
from .evolution import ModeState

MAGIC = "MAXMOR-CHECKPOINT 1"
_GRID_KEYS = ("mass", "r_star_min", "r_star_max", "n_points", "max_horizon_lapse")


class CheckpointError(ValueError):
    pass


def write_checkpoint(path: Union[str, Path], states: Sequence[ModeState]) -> None:
    if not states:
        raise CheckpointError("nothing to write")
    bg = states[0].bg
    t = states[0].t
    for s in states:
        if s.bg is not bg and s.bg.n_points != bg.n_points:
            raise CheckpointError("all modes must share one grid")
        if s.t != t:
            raise CheckpointError("all modes must be at the same time")
    endian = sys.byteorder
    lines = [MAGIC, f"endian {endian}", "dtype complex128"]
    lines += [f"{k} {getattr(bg, k)!r}" for k in _GRID_KEYS]
    lines += [f"t {t!r}", f"modes {len(states)}"]
    lines += [f"mode {s.l} {s.m}" for s in states]
    lines.append("END")
    dt = np.dtype(complex).newbyteorder("<" if endian == "little" else ">")
    with open(path, "wb") as fh:
        fh.write(("\n".join(lines) + "\n").encode("ascii"))
        for s in states:
            for arr in (s.phi0, s.phi1, s.phi2):
                fh.write(np.ascontiguousarray(arr, dtype=dt).tobytes())


def read_checkpoint(path: Union[str, Path], bg: BackgroundModel = None) -> List[ModeState]:
    """Load states; ``bg`` is reused when it matches the stored grid."""
    data = Path(path).read_bytes()
    end = data.find(b"\nEND\n")
    if not data.startswith(MAGIC.encode()) or end < 0:
        raise CheckpointError(f"{path}: not a checkpoint file")
    header = data[: end].decode("ascii").splitlines()[1:]
    payload = data[end + 5:]
    meta = {}
    modes = []
    for line in header:
        key, _, value = line.partition(" ")
        if key == "mode":
            l, m = value.split()
            modes.append((int(l), int(m)))
        else:
            meta[key] = value
    try:
        endian = {"little": "<", "big": ">"}[meta["endian"]]
        if meta["dtype"] != "complex128":
            raise CheckpointError(f"unsupported dtype {meta['dtype']}")
        grid = dict(
            mass=float(meta["mass"]),
            r_star_min=float(meta["r_star_min"]),
            r_star_max=float(meta["r_star_max"]),
            n_points=int(meta["n_points"]),
            max_horizon_lapse=float(meta["max_horizon_lapse"]),
        )
        t = float(meta["t"])
        count = int(meta["modes"])
    except KeyError as exc:
        raise CheckpointError(f"{path}: header lacks {exc.args[0]!r}") from None
    if count != len(modes):
        raise CheckpointError(f"{path}: header lists {len(modes)} modes, expected {count}")
    n = grid["n_points"]
    if len(payload) != 48 * count * n:
        raise CheckpointError(f"{path}: payload has {len(payload)} bytes, expected {48 * count * n}")
    if bg is None or any(getattr(bg, k) != v for k, v in grid.items()):
        bg = BackgroundModel(**grid)
    arrays = np.frombuffer(payload, dtype=np.dtype(complex).newbyteorder(endian)).reshape(count, 3, n)
    arrays = arrays.astype(complex)
    return [ModeState(l, m, t, a[0].copy(), a[1].copy(), a[2].copy(), bg) for (l, m), a in zip(modes, arrays)]
