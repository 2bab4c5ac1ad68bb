import os
from dataclasses import dataclass

from dotenv import load_dotenv

# Load environment variables
load_dotenv()


@dataclass
class Settings:
    """Runtime defaults. CLI flags override these after startup."""

    precision_start_bits: int = int(os.getenv('PRECISION_START_BITS', '64'))
    precision_bits: int = int(os.getenv('PRECISION_BITS', '4096'))
    factor_bound: int = int(os.getenv('FACTOR_BOUND', '10000'))
    base_k: int = int(os.getenv('BASE_K', '2'))
    jobs: int = int(os.getenv('JOBS', '1'))
    seed: int = int(os.getenv('SEED', '0'))
    grid_client_cap: int = int(os.getenv('GRID_CLIENT_CAP', '250000'))
    perturb_retries: int = int(os.getenv('PERTURB_RETRIES', '8'))
    perturb_iterations: int = int(os.getenv('PERTURB_ITERATIONS', '200'))
    log_level: str = os.getenv('LOG_LEVEL', 'INFO')


settings = Settings()
