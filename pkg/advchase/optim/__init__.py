from .cma import CmaConfig, CmaState, cma_init, ask, tell, best
