"""Shared configuration values for FlowToric."""

import os

# Resource caps can be overridden per machine; CLI flags override per run
DEFAULT_POINT_CAP = int(os.getenv("FLOWTORIC_POINT_CAP", "1000000"))
DEFAULT_FIBER_CAP = int(os.getenv("FLOWTORIC_FIBER_CAP", "20000"))
DEFAULT_TIME_CAP_SECONDS = float(os.getenv("FLOWTORIC_TIME_CAP_SECONDS", "60"))
DEFAULT_SEED = int(os.getenv("FLOWTORIC_SEED", "20240601"))

# Flow polytopes and their cells have toric ideals generated in degree 3
GENERATOR_DEGREE = int(os.getenv("FLOWTORIC_GENERATOR_DEGREE", "3"))

LOG_LEVEL = os.getenv("FLOWTORIC_LOG_LEVEL", "INFO")
LOG_FORMAT = '%(asctime)s - %(levelname)s - %(message)s'
