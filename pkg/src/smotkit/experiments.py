"""Component ablation over the fixed synthetic benchmark suite."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .association import AssociationConfig, run_sequence
from .evaluation import count_id_switches, evaluate
from .geometry import SimilarityConfig
from .motion import MotionConfig
from .sim import benchmark_suite, generate
from .trackset import from_records

# Each step adds one component to the previous one. "plain" keeps the
# observation-momentum direction term but no EMA smoothing, uses plain IoU.
ABLATION_CONFIGS: dict[str, AssociationConfig] = {
    "plain": AssociationConfig(
        sim=SimilarityConfig(use_expansion=False, use_distance_penalty=False), motion=MotionConfig(use_ema=False)
    ),
    "+ema": AssociationConfig(sim=SimilarityConfig(use_expansion=False, use_distance_penalty=False)),
    "+expansion": AssociationConfig(sim=SimilarityConfig(use_distance_penalty=False)),
    "+distance": AssociationConfig(),
}


@dataclass
class AblationResult:
    names: list
    so_hota: dict = field(default_factory=dict)  # config -> per-scenario scores
    id_switches: dict = field(default_factory=dict)  # config -> per-scenario counts

    def mean_so_hota(self, name: str) -> float:
        return float(np.mean(self.so_hota[name]))

    def total_switches(self, name: str) -> int:
        return int(sum(self.id_switches[name]))

    def strictly_increasing(self) -> bool:
        means = [self.mean_so_hota(n) for n in self.names]
        return all(b > a for a, b in zip(means, means[1:]))

    def switch_reduction(self, base: str = "plain", full: str = "+distance") -> float:
        b = self.total_switches(base)
        return 0.0 if b == 0 else 1.0 - self.total_switches(full) / b

    def rows(self):
        for n in self.names:
            yield n, self.mean_so_hota(n), self.total_switches(n)


def run_ablation(specs=None, configs=None) -> AblationResult:
    specs = benchmark_suite() if specs is None else specs
    configs = ABLATION_CONFIGS if configs is None else configs
    res = AblationResult(list(configs), {k: [] for k in configs}, {k: [] for k in configs})
    for spec in specs:
        gt, dets = generate(spec)
        for name, cfg in configs.items():
            recs = run_sequence(dets, cfg, n_frames=spec.n_frames)
            pred = from_records((r.frame, r.id, r.bbox) for r in recs)
            res.so_hota[name].append(evaluate(gt, pred).so_hota)
            res.id_switches[name].append(count_id_switches(gt, pred))
    return res
