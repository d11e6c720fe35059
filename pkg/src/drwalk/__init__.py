"""Monte Carlo laboratory for directionally reinforced random walks."""

from .directions import (DirectionSet, DoeblinKernel, StationaryLaw, TransitionKernel,
                         doeblin_step, stationary_distribution, step)
from .limits import (Ensemble, ballistic_ratio, cycle_sum_oracle, diffusive_path, lil_envelope,
                     lln_error, stable_scaled)
from .stats import gaussian_fit_test, hill_index, ks_two_sample
from .walk import Trajectory, decompose, occupation_rates, position_at, simulate
from .waiting import StableReference, WaitingTimeModel, norming, sample_stable, sample_waiting

__version__ = "0.1.0"
