"""Plain-text formats for profiles, branches, monitor series and spectra.

All files are comment-friendly CSV: '#' lines carry metadata, the first
of them a key=value header that makes every file self-describing."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np

from .continuation import Branch, EventType
from .errors import DomainError, GridMismatch
from .evolve import Trajectory
from .grid import Field, Grid
from .model import ModelParams
from .stability import Spectrum


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _header_fields(line: str, tag: str) -> dict:
    body = line.lstrip("#").strip()
    if not body.startswith(tag):
        raise DomainError(f"expected a '{tag}' header, got: {line.strip()!r}")
    out = {}
    for tok in body[len(tag):].split():
        if "=" not in tok:
            raise DomainError(f"malformed header token {tok!r}")
        key, val = tok.split("=", 1)
        out[key] = val
    return out


def save_profile(path, field: Field, p: ModelParams, c: float = 0.0,
                 comments: Iterable[str] = ()) -> None:
    g = field.grid
    with open(path, "w") as fh:
        fh.write(f"# profile L={_fmt(g.length)} n={g.n} r={_fmt(p.r)} "
                 f"b={_fmt(p.b)} alpha={_fmt(p.alpha)} beta={_fmt(p.beta)} "
                 f"c={_fmt(c)}\n")
        for line in comments:
            fh.write(f"# {line}\n")
        fh.write("x,u\n")
        for x, u in zip(g.nodes, field.values):
            fh.write(f"{_fmt(x)},{_fmt(u)}\n")


def load_profile(path) -> Tuple[Field, ModelParams, float]:
    with open(path) as fh:
        lines = fh.readlines()
    if not lines:
        raise DomainError(f"{path}: empty profile file")
    head = _header_fields(lines[0], "profile")
    try:
        grid = Grid(length=float(head["L"]), n=int(head["n"]))
        p = ModelParams(r=float(head["r"]), b=float(head["b"]),
                        alpha=float(head["alpha"]), beta=float(head["beta"]))
        c = float(head["c"])
    except KeyError as exc:
        raise DomainError(f"{path}: header misses field {exc}")
    values = []
    for line in lines[1:]:
        line = line.strip()
        if not line or line.startswith("#") or line.startswith("x,"):
            continue
        cols = line.split(",")
        values.append(float(cols[1]))
    if len(values) != grid.n:
        raise GridMismatch(
            f"{path}: header says n={grid.n} but found {len(values)} rows")
    return Field(grid, np.array(values)), p, c


@dataclass
class BranchTable:
    """Array view of a saved branch (profiles are not stored)."""

    label: str
    params: ModelParams
    mode: str
    stop_reason: str
    index: np.ndarray
    r: np.ndarray
    l2norm: np.ndarray
    c: np.ndarray
    counts: np.ndarray  # (n, 4) float, nan where unknown
    event: list


def save_branch(path, branch: Branch, comments: Iterable[str] = ()) -> None:
    p = branch.params
    meta = branch.metadata
    with open(path, "w") as fh:
        fh.write(f"# branch label={branch.label} b={_fmt(p.b)} "
                 f"alpha={_fmt(p.alpha)} beta={_fmt(p.beta)} "
                 f"mode={meta.get('mode', '?')} "
                 f"stop={meta.get('stop_reason', '?')}\n")
        for line in comments:
            fh.write(f"# {line}\n")
        fh.write("index,r,l2norm,c,m_r,m_c,n_r,n_c,event\n")
        for i, pt in enumerate(branch.points):
            if pt.counts is None:
                cnt = ",,,"
            else:
                cnt = ",".join(str(int(v)) for v in pt.counts)
            ev = "" if pt.event is EventType.NONE else pt.event.value
            fh.write(f"{i},{_fmt(pt.r)},{_fmt(pt.l2norm)},"
                     f"{_fmt(pt.state.c)},{cnt},{ev}\n")


def load_branch(path) -> BranchTable:
    with open(path) as fh:
        lines = fh.readlines()
    if not lines:
        raise DomainError(f"{path}: empty branch file")
    head = _header_fields(lines[0], "branch")
    idx, rs, norms, cs, counts, events = [], [], [], [], [], []
    for line in lines[1:]:
        line = line.strip()
        if not line or line.startswith("#") or line.startswith("index,"):
            continue
        cols = line.split(",")
        if len(cols) != 9:
            raise DomainError(f"{path}: expected 9 columns, got {len(cols)}")
        idx.append(int(cols[0]))
        rs.append(float(cols[1]))
        norms.append(float(cols[2]))
        cs.append(float(cols[3]))
        counts.append([float(v) if v else np.nan for v in cols[4:8]])
        events.append(cols[8])
    return BranchTable(
        label=head.get("label", "?"),
        params=ModelParams(r=rs[0] if rs else 0.0,
                           b=float(head.get("b", 0.0)),
                           alpha=float(head.get("alpha", 0.0)),
                           beta=float(head.get("beta", 0.0))),
        mode=head.get("mode", "?"),
        stop_reason=head.get("stop", "?"),
        index=np.array(idx, dtype=int),
        r=np.array(rs),
        l2norm=np.array(norms),
        c=np.array(cs),
        counts=np.array(counts) if counts else np.empty((0, 4)),
        event=events,
    )


def save_monitors(path, traj: Trajectory, comments: Iterable[str] = ()) -> None:
    p = traj.params
    with open(path, "w") as fh:
        fh.write(f"# monitors r={_fmt(p.r)} b={_fmt(p.b)} "
                 f"alpha={_fmt(p.alpha)} beta={_fmt(p.beta)} "
                 f"dt={_fmt(traj.config.dt)} "
                 f"scheme={traj.config.scheme.value}\n")
        for line in comments:
            fh.write(f"# {line}\n")
        cols = sorted(traj.monitors.keys())
        fh.write("t," + ",".join(cols) + "\n")
        for i, t in enumerate(traj.monitor_times):
            row = [_fmt(t)] + [_fmt(traj.monitors[c][i]) for c in cols]
            fh.write(",".join(row) + "\n")


def load_monitors(path) -> Tuple[dict, np.ndarray, dict]:
    with open(path) as fh:
        lines = fh.readlines()
    head = _header_fields(lines[0], "monitors")
    col_names: Optional[Sequence[str]] = None
    rows = []
    for line in lines[1:]:
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if col_names is None:
            col_names = line.split(",")
            continue
        rows.append([float(v) for v in line.split(",")])
    if col_names is None:
        raise DomainError(f"{path}: no column header")
    data = np.array(rows)
    times = data[:, 0]
    series = {name: data[:, j] for j, name in enumerate(col_names) if j > 0}
    return head, times, series


def save_spectrum(path, spectrum: Spectrum, comments: Iterable[str] = ()) -> None:
    with open(path, "w") as fh:
        m_r, m_c, n_r, n_c = spectrum.counts
        fh.write(f"# spectrum m_r={m_r} m_c={m_c} n_r={n_r} n_c={n_c} "
                 f"mixed={spectrum.mixed_unstable} "
                 f"sigma_tol={_fmt(spectrum.sigma_tol)}\n")
        for line in comments:
            fh.write(f"# {line}\n")
        fh.write("re,im,parity\n")
        kept = len(spectrum.parities)
        for j, val in enumerate(spectrum.eigenvalues):
            par = ""
            if j < kept and spectrum.parities[j] is not None:
                par = spectrum.parities[j].value
            fh.write(f"{_fmt(val.real)},{_fmt(val.imag)},{par}\n")


def save_spacetime(path, traj: Trajectory, comments: Iterable[str] = ()) -> None:
    """Snapshot matrix as CSV, one row per recorded time, one column per
    grid node, with the time in the leading column."""
    p = traj.params
    g = traj.grid
    with open(path, "w") as fh:
        fh.write(f"# spacetime L={_fmt(g.length)} n={g.n} r={_fmt(p.r)} "
                 f"b={_fmt(p.b)} alpha={_fmt(p.alpha)} beta={_fmt(p.beta)} "
                 f"dt={_fmt(traj.config.dt)}\n")
        for line in comments:
            fh.write(f"# {line}\n")
        fh.write("t," + ",".join(_fmt(x) for x in g.nodes) + "\n")
        for t, snap in zip(traj.snapshot_times, traj.snapshots):
            fh.write(_fmt(t) + "," + ",".join(_fmt(v) for v in snap) + "\n")


def save_wavenumber_table(path, report, comments: Iterable[str] = ()) -> None:
    """Raw wavenumber samples of a hysteresis loop measurement as CSV
    rows (r, k, segment), segment naming which fold the segment climbs
    toward."""
    with open(path, "w") as fh:
        fh.write(f"# wavenumbers max_split={_fmt(report.max_split)} "
                 f"noise={_fmt(report.noise)} "
                 f"is_loop={int(report.is_loop)}\n")
        for line in comments:
            fh.write(f"# {line}\n")
        fh.write("r,k,segment\n")
        for r, k in zip(report.r_upright_raw, report.k_upright_raw):
            fh.write(f"{_fmt(r)},{_fmt(k)},upright\n")
        for r, k in zip(report.r_upleft_raw, report.k_upleft_raw):
            fh.write(f"{_fmt(r)},{_fmt(k)},upleft\n")
