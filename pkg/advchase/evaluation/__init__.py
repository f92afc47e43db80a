from .metrics import ChaseMetrics, CrossMatrix, metrics_table, cross_matrix_table
from .suites import (ChaseEnvironment, standard_environments, run_sine_benchmark, run_cross_matrix,
                     run_unseen_adversaries, learning_curve, generation_drops)
