"""Mutation/selection optimizer over flat weight vectors.

Each generation the parent genome w spawns an even number of children in
antithetic pairs, w + sigma*eps and w - sigma*eps, with eps drawn standard
normal from a seed derived from (master_seed, generation, pair).  Children
are scored by integer reward, rewards are converted to rank-shaped
returns, and the parent moves by the return-weighted sum of the signed
perturbations:

    w' = w + lr / (sigma * N_c) * sum_c sign_c * shaped_c * eps_pair(c)

The shaped return of child c is computed from the 1-based index ind_c of
the first occurrence of its reward in the descending-sorted reward list:

    numerator_c = max(0, log2(N_c/2 - 1) - log2(max(1, ind_c - 1)))

normalized to sum to one (all zero when every numerator is zero).  The
max(1, .) clamp removes the log2(0) singularity at ind=1, so the top two
ranks share the largest weight; ranks at or below N_c/2 get exactly zero.
Because both children of a pair share eps, equal rewards within every pair
cancel exactly and the parent is returned unchanged, bit for bit.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from . import executor as executor_mod
from . import rng
from .errors import ConfigError, ShapeError
from .model import Genome

_MIN_OFFSPRING = 6  # below this, log2(N_c/2 - 1) <= 0 and no child can contribute


@dataclass(frozen=True)
class EsConfig:
    """Optimizer hyperparameters."""

    n_offspring: int = 40
    sigma: float = 0.1
    lr: float = 0.1
    master_seed: int = 0
    max_generations: int = 1000

    def __post_init__(self):
        if self.n_offspring % 2 != 0:
            raise ConfigError(
                f"n_offspring must be even, got {self.n_offspring}",
                path="es.n_offspring",
            )
        if self.n_offspring < _MIN_OFFSPRING:
            raise ConfigError(
                f"n_offspring must be >= {_MIN_OFFSPRING} so top ranks can "
                f"contribute, got {self.n_offspring}",
                path="es.n_offspring",
            )
        if not self.sigma > 0:
            raise ConfigError(f"sigma must be > 0, got {self.sigma}", path="es.sigma")
        if not self.lr > 0:
            raise ConfigError(f"lr must be > 0, got {self.lr}", path="es.lr")
        if self.max_generations < 0:
            raise ConfigError(
                f"max_generations must be >= 0, got {self.max_generations}",
                path="es.max_generations",
            )

    def to_json_dict(self) -> dict:
        return {
            "n_offspring": self.n_offspring,
            "sigma": self.sigma,
            "lr": self.lr,
            "master_seed": self.master_seed,
            "max_generations": self.max_generations,
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "EsConfig":
        known = {"n_offspring", "sigma", "lr", "master_seed", "max_generations"}
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"unknown keys {sorted(unknown)}", path="es")
        return cls(**doc)


@dataclass(frozen=True)
class PerturbationSet:
    """One generation's noise, defined implicitly by per-pair seeds.

    Child k belongs to pair k//2 with sign +1 for even k, -1 for odd k.
    Epsilon vectors are regenerated from their seed on demand, so workers
    and the update step never hold more than one at a time.
    """

    generation: int
    seeds: tuple
    sigma: float
    genome_length: int

    @property
    def n_pairs(self) -> int:
        return len(self.seeds)

    @property
    def n_children(self) -> int:
        return 2 * len(self.seeds)

    @staticmethod
    def sign_of(child_index: int) -> int:
        return 1 if child_index % 2 == 0 else -1

    def epsilon(self, pair_index: int) -> np.ndarray:
        """Standard-normal float64 vector of genome length for a pair."""
        return rng.normal_vector(self.seeds[pair_index], self.genome_length)

    @property
    def epsilons(self) -> list:
        return [self.epsilon(k) for k in range(self.n_pairs)]

    def child_values(self, parent_values: np.ndarray, child_index: int) -> np.ndarray:
        """Materialize child weights w +/- sigma*eps as float32."""
        sign = self.sign_of(child_index)
        eps = self.epsilon(child_index // 2)
        values = parent_values.astype(np.float64)
        values += (sign * self.sigma) * eps
        return values.astype(np.float32)

    def child_genome(self, parent: Genome, child_index: int) -> Genome:
        return Genome(
            values=self.child_values(parent.values, child_index),
            spec_fingerprint=parent.spec_fingerprint,
        )


def generate_perturbations(
    parent: Genome, config: EsConfig, generation: int
) -> PerturbationSet:
    """Derive this generation's per-pair noise seeds from the master seed."""
    if len(parent) == 0:
        raise ShapeError("cannot perturb an empty genome")
    seeds = tuple(
        rng.derive_seed(config.master_seed, generation, pair)
        for pair in range(config.n_offspring // 2)
    )
    return PerturbationSet(
        generation=generation,
        seeds=seeds,
        sigma=config.sigma,
        genome_length=len(parent),
    )


@dataclass(frozen=True, eq=False)
class ShapedReturns:
    """Normalized rank-shaped return per child (all zero when degenerate)."""

    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return self.values.size


def shaped_returns(rewards, config: EsConfig) -> ShapedReturns:
    """Rank-shaped returns for one generation's child rewards.

    Depends on the rewards only through their ranks: any strictly
    increasing transform of the reward vector produces identical output.
    """
    rewards = np.asarray(rewards, dtype=np.float64)
    n = rewards.size
    if n != config.n_offspring:
        raise ShapeError(
            f"got {n} rewards but config.n_offspring is {config.n_offspring}"
        )
    # 1-based index of the first occurrence of each child's reward in the
    # descending-sorted reward list = 1 + count of strictly larger rewards.
    ind = 1 + np.sum(rewards[np.newaxis, :] > rewards[:, np.newaxis], axis=1)
    top = math.log2(n / 2 - 1)
    numerators = np.maximum(0.0, top - np.log2(np.maximum(1, ind - 1)))
    total = numerators.sum()
    if total <= 0.0:
        return ShapedReturns(values=np.zeros(n, dtype=np.float64))
    return ShapedReturns(values=numerators / total)


def parent_update(
    parent: Genome,
    perturbations: PerturbationSet,
    shaped: ShapedReturns,
    config: EsConfig,
) -> Genome:
    """Move the parent by the return-weighted sum of signed perturbations.

    The two children of a pair share one eps with opposite signs, so their
    contributions collapse to (shaped_plus - shaped_minus) * eps.  When
    every pair is tied (in particular when all rewards are equal) the
    coefficients are exactly zero and the parent is returned unchanged.
    """
    if perturbations.genome_length != len(parent):
        raise ShapeError(
            f"perturbations are for genome length {perturbations.genome_length}, "
            f"parent has {len(parent)}"
        )
    if len(shaped) != perturbations.n_children:
        raise ShapeError(
            f"got {len(shaped)} shaped returns for {perturbations.n_children} children"
        )
    if perturbations.n_children != config.n_offspring:
        raise ShapeError(
            f"perturbation set has {perturbations.n_children} children but "
            f"config.n_offspring is {config.n_offspring}"
        )

    pair_coeffs = shaped.values[0::2] - shaped.values[1::2]
    if not np.any(pair_coeffs):
        return Genome(values=parent.values, spec_fingerprint=parent.spec_fingerprint)

    accum = np.zeros(len(parent), dtype=np.float64)
    for pair, coeff in enumerate(pair_coeffs):
        if coeff != 0.0:
            accum += coeff * perturbations.epsilon(pair)
    scale = config.lr / (config.sigma * config.n_offspring)
    new_values = (parent.values.astype(np.float64) + scale * accum).astype(np.float32)
    return Genome(values=new_values, spec_fingerprint=parent.spec_fingerprint)


@dataclass(frozen=True)
class GenerationReport:
    """Per-generation statistics, one CSV row's worth."""

    generation: int
    child_rewards: tuple
    best: int
    mean: float
    worst: int
    parent_reward: int
    test_accuracy_max: float | None
    wall_time_ms: int

    def __post_init__(self):
        if not self.worst <= self.mean <= self.best:
            raise ValueError(
                f"reward stats out of order: worst {self.worst}, mean "
                f"{self.mean}, best {self.best}"
            )


def run_generation(
    parent: Genome,
    config: EsConfig,
    generation: int,
    fitness_fn,
    *,
    workers: int = 1,
    test_fn=None,
    instrument=None,
) -> tuple:
    """One perturb -> evaluate -> shape -> update cycle.

    ``fitness_fn`` maps a genome to its integer reward; ``test_fn`` (when
    given) maps a genome to held-out accuracy and is applied to every
    child and the parent for the population-max statistic.  Children are
    evaluated through the executor; rewards land in child-index order no
    matter which worker finishes first.
    """
    start = time.perf_counter()
    perturbations = generate_perturbations(parent, config, generation)

    if test_fn is None:
        child_fn = fitness_fn
    else:
        def child_fn(genome):
            return fitness_fn(genome), test_fn(genome)

    outcomes = executor_mod.map_children(
        parent, perturbations, child_fn, workers, instrument=instrument
    )
    if test_fn is None:
        rewards = [int(r) for r in outcomes]
        test_accs = None
    else:
        rewards = [int(r) for r, _ in outcomes]
        test_accs = [acc for _, acc in outcomes]

    parent_reward = int(fitness_fn(parent))
    test_accuracy_max = None
    if test_fn is not None:
        test_accuracy_max = float(max(max(test_accs), test_fn(parent)))

    shaped = shaped_returns(rewards, config)
    new_parent = parent_update(parent, perturbations, shaped, config)

    wall_ms = int(round((time.perf_counter() - start) * 1000.0))
    report = GenerationReport(
        generation=generation,
        child_rewards=tuple(rewards),
        best=max(rewards),
        mean=sum(rewards) / len(rewards),
        worst=min(rewards),
        parent_reward=parent_reward,
        test_accuracy_max=test_accuracy_max,
        wall_time_ms=wall_ms,
    )
    return new_parent, report


def evolve(
    initial: Genome,
    config: EsConfig,
    fitness_fn,
    test_eval_fn=None,
    sinks=(),
    *,
    workers: int = 1,
    eval_interval: int = 10,
    early_stop_patience: int = 0,
    max_reward: int | None = None,
    start_generation: int = 0,
) -> Genome:
    """Run generations until the budget or the early-stop rule ends the run.

    Each finished generation's report (and the genome it produced) is
    streamed to every sink.  With ``early_stop_patience`` > 0 the run ends
    once the best child reward has equaled ``max_reward`` for that many
    consecutive generations; by default the full budget is spent.  The
    trajectory is a pure function of (initial, config): held-out
    evaluation and sinks never touch the random streams.
    """
    if early_stop_patience > 0 and max_reward is None:
        raise ConfigError(
            "early stopping requires the maximum possible reward",
            path="run.early_stop_patience",
        )
    parent = initial
    saturated = 0
    for generation in range(start_generation, config.max_generations):
        test_fn = None
        if test_eval_fn is not None and generation % eval_interval == 0:
            test_fn = test_eval_fn
        parent, report = run_generation(
            parent,
            config,
            generation,
            fitness_fn,
            workers=workers,
            test_fn=test_fn,
        )
        for sink in sinks:
            sink(report, parent)
        if early_stop_patience > 0:
            saturated = saturated + 1 if report.best >= max_reward else 0
            if saturated >= early_stop_patience:
                break
    return parent
