from .schedule import TrainSchedule, paper_schedule, desk_schedule
from .ensemble import AdversaryRecord, AdversaryEnsemble, static_initial_adversary, split_train_test, TRAIN, TEST
from .adversarial import chaser_fitness, learn_to_chase, learn_to_escape, adversarial_training
from .baselines import BASELINES, train_baseline
