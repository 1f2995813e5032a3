# run_records.py
"""Run records (YAML) and profile tables (CSV: r,u,f_u at 17 significant digits)."""
import asyncio
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import aiofiles
import numpy as np
import yaml

from dual_transform import DualTransform
from errors import GridMismatch, QuasinodalError
from radial_mesh import RadialField, RadialGrid
from reports import plain
from run_logger import logger

ARTIFACT_VERSION = '0.1.0'
PROFILE_HEADER = 'r,u,f_u'


@dataclass
class RunRecord:
    command: str
    config: Dict[str, Any]
    solves: List[Dict[str, Any]] = field(default_factory=list)
    properties: List[Dict[str, Any]] = field(default_factory=list)
    convergence: List[Dict[str, Any]] = field(default_factory=list)
    status: str = 'ok'
    error: Optional[Dict[str, Any]] = None
    log: List[str] = field(default_factory=list)
    wall_clock: Dict[str, float] = field(default_factory=dict)
    version: str = ARTIFACT_VERSION
    _started: float = field(default_factory=time.perf_counter, repr=False)

    def add_solve(self, report):
        self.solves.append(report.to_dict())

    def add_property(self, report):
        self.properties.append(report.to_dict())

    def fail(self, exc: BaseException):
        self.status = 'failed'
        self.error = {'type': type(exc).__name__, 'message': str(exc)}
        for attr in ('annulus', 'subdomain', 'mu', 'l'):
            if getattr(exc, attr, None) is not None:
                self.error[attr] = getattr(exc, attr)
        partial = getattr(exc, 'report', None)
        if partial is not None:
            self.solves.append(partial.to_dict())

    def finish(self):
        self.wall_clock = {'unix_time': time.time(), 'elapsed_s': time.perf_counter() - self._started}

    def to_dict(self) -> Dict[str, Any]:
        return plain({
            'version': self.version,
            'command': self.command,
            'status': self.status,
            'config': self.config,
            'solves': self.solves,
            'properties': self.properties,
            'convergence': self.convergence,
            'error': self.error,
            'log': self.log,
            'wall_clock': self.wall_clock,
        })

    def payload(self) -> Dict[str, Any]:
        """Everything except the wall-clock section; identical for identical inputs."""
        data = self.to_dict()
        data.pop('wall_clock')
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'RunRecord':
        return cls(command=data['command'], config=data.get('config', {}), solves=data.get('solves', []),
                   properties=data.get('properties', []), convergence=data.get('convergence', []),
                   status=data.get('status', 'ok'), error=data.get('error'), log=data.get('log', []),
                   wall_clock=data.get('wall_clock', {}), version=data.get('version', ARTIFACT_VERSION))


def profile_text(fld: RadialField, transform: DualTransform) -> str:
    fu = np.atleast_1d(transform.f_forward(fld.values))
    rows = [PROFILE_HEADER]
    rows.extend(f"{r:.17g},{u:.17g},{f:.17g}" for r, u, f in zip(fld.grid.nodes, fld.values, fu))
    return '\n'.join(rows) + '\n'


async def write_record_async(record: RunRecord, path: Path):
    text = yaml.safe_dump(record.to_dict(), sort_keys=False, allow_unicode=True)
    async with aiofiles.open(path, 'w', encoding='utf-8') as f:
        await f.write(text)


async def write_profile_async(fld: RadialField, transform: DualTransform, path: Path):
    async with aiofiles.open(path, 'w', encoding='utf-8') as f:
        await f.write(profile_text(fld, transform))


async def _save(record: RunRecord, out_dir: Path, stem: str,
                profiles: Dict[str, Tuple[RadialField, DualTransform]]) -> Dict[str, Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    written = {'record': out_dir / f"{stem}.yml"}
    tasks = [write_record_async(record, written['record'])]
    for name, (fld, transform) in profiles.items():
        path = out_dir / f"{stem}_{name}.csv"
        written[name] = path
        tasks.append(write_profile_async(fld, transform, path))
    await asyncio.gather(*tasks)
    return written


def save_run(record: RunRecord, out_dir: Path, stem: str,
             profiles: Optional[Dict[str, Tuple[RadialField, DualTransform]]] = None) -> Dict[str, Path]:
    """Writes the record and any profiles; returns the written paths by name."""
    record.finish()
    written = asyncio.run(_save(record, Path(out_dir), stem, profiles or {}))
    for name, path in written.items():
        logger.info(f"Wrote {name}: {path}")
    return written


def load_record(path: Path) -> RunRecord:
    with open(path, 'r', encoding='utf-8') as f:
        return RunRecord.from_dict(yaml.safe_load(f))


def read_profile(path: Path, grid: Optional[RadialGrid] = None):
    """Parses a profile table; returns (r, u, f_u) arrays, or a RadialField of u when a grid is given."""
    with open(path, 'r', encoding='utf-8') as f:
        header = f.readline().strip()
        if header != PROFILE_HEADER:
            raise QuasinodalError(f"{path}: unexpected profile header '{header}'")
        data = np.loadtxt(f, delimiter=',', ndmin=2)
    r, u, fu = data[:, 0], data[:, 1], data[:, 2]
    if grid is None:
        return r, u, fu
    if r.shape != grid.nodes.shape or not np.allclose(r, grid.nodes, rtol=1e-15, atol=0.0):
        raise GridMismatch(f"{path}: profile nodes do not match grid {grid.key}")
    return RadialField(grid, u)
