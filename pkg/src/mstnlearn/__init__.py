"""Mood learning on a mental state transition network.

Emotion intensities drive a seven-state mood network; recorded episodes are
cleaned of detours by profit sharing, a recurrent network learns the personal
transition tendency by BPTT, and the learned network is read back as a
transition matrix and scored against the Big Five traits.
"""

from ._kernels import BACKEND
from .emotion import aggregate, group_of, valence
from .frequency import compare_matrices, enumerate_patterns, transition_matrix_from_net
from .mstn import MentalState, cost_from_counts, group_target, idle_transition, next_state, record_transition
from .profit_sharing import (
    Episode, ReinforceConfig, Rule, WeightTable, check_suppression, detect_detours, episode_reward,
    reinforce, remove_detours, select_action,
)
from .rnn import NetWeights, Topology, TrainingSequence, bptt_gradients, forward, init_weights, train, update_weights
from .scenario_io import load_bundle, load_scenario, load_table1, save_bundle
from .traits import Trait, builtin_mapping, trait_scores

__version__ = "0.1.0"
