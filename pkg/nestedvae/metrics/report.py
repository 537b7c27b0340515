# Copyright (c) 2024 NestedVAE developers
#
# MIT License
#
# Permission is hereby granted, free of charge, to any person obtaining a copy
# of this software and associated documentation files (the "Software"), to deal
# in the Software without restriction, including without limitation the rights
# to use, copy, modify, merge, publish, distribute, sublicense, and/or sell
# copies of the Software, and to permit persons to whom the Software is
# furnished to do so, subject to the following conditions:
#
# The above copyright notice and this permission notice shall be included in all
# copies or substantial portions of the Software.
#
# THE SOFTWARE IS PROVIDED "AS IS", WITHOUT WARRANTY OF ANY KIND, EXPRESS OR
# IMPLIED, INCLUDING BUT NOT LIMITED TO THE WARRANTIES OF MERCHANTABILITY,
# FITNESS FOR A PARTICULAR PURPOSE AND NONINFRINGEMENT. IN NO EVENT SHALL THE
# AUTHORS OR COPYRIGHT HOLDERS BE LIABLE FOR ANY CLAIM, DAMAGES OR OTHER
# LIABILITY, WHETHER IN AN ACTION OF CONTRACT, TORT OR OTHERWISE, ARISING FROM,
# OUT OF OR IN CONNECTION WITH THE SOFTWARE OR THE USE OR OTHER DEALINGS IN THE
# SOFTWARE.
#
# Evaluation report: per-domain probe scores aggregated over seeds, adjusted
# parity across domains and protocol-specific extras, written as JSON and CSV.
#
# ===============================================================================================


import csv
import json
import logging
from collections import defaultdict
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from nestedvae.metrics.parity import adjusted_parity, population_std, standard_error

__all__ = [
    'ScoreRow',
    'MetricsReport',
    'aggregate_runs',
    'CSV_COLUMNS',
]

logger = logging.getLogger(__name__)

CSV_COLUMNS = ('protocol', 'model', 'probe', 'domain', 'metric', 'mean', 'stderr', 'n_runs')

# (probe, domain, metric) -> value for one seed
RunScores = Mapping[Tuple[str, Optional[int], str], float]


@dataclass
class ScoreRow:
    probe: str
    domain: Optional[int]
    metric: str
    mean: float
    stderr: float
    n_runs: int


def aggregate_runs(runs: Sequence[RunScores]) -> List[ScoreRow]:
    """Mean and standard error over seeds of every ``(probe, domain, metric)`` cell."""
    cells: Dict[Tuple[str, Optional[int], str], List[float]] = defaultdict(list)
    for run in runs:
        for key, value in run.items():
            cells[key].append(float(value))

    def order(key):
        probe, domain, metric = key
        return probe, -1 if domain is None else domain, metric

    return [ScoreRow(k[0], k[1], k[2], float(np.mean(v)), standard_error(v), len(v))
            for k, v in sorted(cells.items(), key=lambda kv: order(kv[0]))]


@dataclass
class MetricsReport:
    """
    :param protocol: ``lodo``, ``change`` or ``canm``.
    :param model_kind: ``nested`` or ``beta-vae``.
    :param rows: aggregated cells; ``domain`` is the held-out domain for leave-one-domain-out
        probes, the evaluated domain for per-domain probes and ``None`` for pooled scores.
    :param adjusted_parity: ``"<probe>/<metric>"`` -> adjusted parity over that probe's domains.
    :param domain_spread: ``"<probe>/<metric>"`` -> population std across domains.
    :param extras: protocol-specific values (sufficiency check, factor recovery).
    :param config: the resolved experiment config.
    :param seeds: the run seeds.
    """

    protocol: str
    model_kind: str
    rows: List[ScoreRow] = field(default_factory=list)
    adjusted_parity: Dict[str, float] = field(default_factory=dict)
    domain_spread: Dict[str, float] = field(default_factory=dict)
    change_detection_accuracy: Optional[float] = None
    extras: Dict[str, Any] = field(default_factory=dict)
    config: Dict[str, Any] = field(default_factory=dict)
    seeds: List[int] = field(default_factory=list)

    def domain_scores(self, probe: str, metric: str) -> Dict[int, float]:
        return {r.domain: r.mean for r in self.rows
                if r.probe == probe and r.metric == metric and r.domain is not None}

    def pooled(self, probe: str, metric: str) -> Optional[ScoreRow]:
        for r in self.rows:
            if r.probe == probe and r.metric == metric and r.domain is None:
                return r
        return None

    def add_parity(self, probe: str, metric: str) -> Optional[float]:
        """Compute adjusted parity over the per-domain means of one probe/metric."""
        scores = self.domain_scores(probe, metric)
        key = '{}/{}'.format(probe, metric)
        if len(scores) < 2:
            logger.warning('%s: %d domain score(s), adjusted parity needs 2', key, len(scores))
            return None
        values = [scores[d] for d in sorted(scores)]
        self.adjusted_parity[key] = adjusted_parity(values)
        self.domain_spread[key] = population_std(values)
        return self.adjusted_parity[key]

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, values: Dict[str, Any]) -> 'MetricsReport':
        values = dict(values)
        values['rows'] = [ScoreRow(**r) for r in values.get('rows', [])]
        return cls(**values)

    def write_json(self, path: str) -> None:
        with open(path, 'w', encoding='utf-8') as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
        logger.info('wrote %s', path)

    @classmethod
    def read_json(cls, path: str) -> 'MetricsReport':
        with open(path, 'r', encoding='utf-8') as fh:
            return cls.from_dict(json.load(fh))

    def csv_rows(self) -> List[Dict[str, Any]]:
        out = [{'protocol': self.protocol, 'model': self.model_kind, 'probe': r.probe,
                'domain': '' if r.domain is None else r.domain, 'metric': r.metric,
                'mean': repr(r.mean), 'stderr': repr(r.stderr), 'n_runs': r.n_runs} for r in self.rows]
        for key in sorted(self.adjusted_parity):
            probe, metric = key.split('/', 1)
            out.append({'protocol': self.protocol, 'model': self.model_kind, 'probe': probe, 'domain': '',
                        'metric': 'adjusted_parity_' + metric, 'mean': repr(self.adjusted_parity[key]),
                        'stderr': '', 'n_runs': len(self.seeds)})
        return out

    def write_csv(self, path: str) -> None:
        """Flat table, one row per cell; the first line is a ``# config:`` comment."""
        with open(path, 'w', newline='', encoding='utf-8') as fh:
            fh.write('# config: {}\n'.format(json.dumps({'config': self.config, 'seeds': self.seeds},
                                                        sort_keys=True)))
            writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
            writer.writeheader()
            writer.writerows(self.csv_rows())
        logger.info('wrote %s', path)
