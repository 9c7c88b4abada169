import logging
from fractions import Fraction

import numpy as np

from .scenario_helper import A_CARD, B_CARD, DegenerateSampleError, Sample, make_distribution
from .strategies_helper import enumerate_strategies

logger = logging.getLogger(__name__)

RNG_ALGORITHM = 'PCG64'


def make_rng(seed):
    return np.random.Generator(np.random.PCG64(seed))


def outcome_table(scenario):
    """(x, a, b) produced by every strategy, shape ``(n_strategies, 3)``."""
    return np.array([strategy.outcome() for strategy in enumerate_strategies(scenario)], dtype=np.int64)


def simulate(q, n, seed):
    """Draws ``n`` i.i.d. rows (x, a, b) from the latent joint ``q``."""
    if n <= 0:
        raise DegenerateSampleError(f"Need a positive sample size, got {n}.")
    rng = make_rng(seed)
    weights = np.asarray(q.q, dtype=np.float64)
    drawn = rng.choice(len(weights), size=n, p=weights / weights.sum())
    logger.info(f"Drew {n} rows from a latent joint with x_card={q.scenario.x_card} (seed {seed})")
    return Sample(q.scenario, outcome_table(q.scenario)[drawn])


def empirical_counts(sample):
    counts = np.zeros((sample.scenario.x_card, A_CARD, B_CARD), dtype=np.int64)
    np.add.at(counts, tuple(sample.rows.T), 1)
    return counts


def empirical_distribution(sample, exact=False):
    """Relative frequencies p(x) and p(a,b|x) of a sample."""
    counts = empirical_counts(sample)
    per_x = counts.sum(axis=(1, 2))
    missing = [x for x, count in enumerate(per_x) if count == 0]
    if missing:
        raise DegenerateSampleError(f"No rows with x in {missing}; p(a,b|x) is undefined there.")
    total = int(per_x.sum())
    if exact:
        p_x = [Fraction(int(count), total) for count in per_x]
        table = [[[Fraction(int(counts[x, a, b]), int(per_x[x])) for b in range(B_CARD)]
                  for a in range(A_CARD)] for x in range(sample.scenario.x_card)]
    else:
        p_x = per_x / total
        table = counts / per_x[:, None, None]
    return make_distribution(p_x, table, exact)
