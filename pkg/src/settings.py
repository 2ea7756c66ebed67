"""
Runtime configuration
Values come from the environment with defaults; command-line flags override them
"""

import os
import logging
from dataclasses import dataclass, replace
from typing import Optional

LOG_FORMAT = '%(asctime)s - %(levelname)s - %(message)s'


@dataclass(frozen=True)
class Settings:
    """Tolerances, seeds and logging level shared by the analysis stages"""

    tol: float = 1e-9
    rank_tol: float = 1e-8
    log_level: str = 'INFO'
    seed: int = 42
    sim_batches: int = 20

    @classmethod
    def from_env(cls) -> 'Settings':
        return cls(
            tol=float(os.getenv('CSERGO_TOL', '1e-9')),
            rank_tol=float(os.getenv('CSERGO_RANK_TOL', '1e-8')),
            log_level=os.getenv('CSERGO_LOG_LEVEL', 'INFO').upper(),
            seed=int(os.getenv('CSERGO_SEED', '42')),
            sim_batches=int(os.getenv('CSERGO_SIM_BATCHES', '20')),
        )

    def override(self, tol: Optional[float] = None, seed: Optional[int] = None) -> 'Settings':
        changes = {}
        if tol is not None:
            changes['tol'] = tol
        if seed is not None:
            changes['seed'] = seed
        return replace(self, **changes)


def configure_logging(level: str = 'INFO') -> None:
    logging.basicConfig(level=getattr(logging, level.upper(), logging.INFO), format=LOG_FORMAT)
