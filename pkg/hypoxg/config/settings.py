"""
Configuration Management for the HypoXG toolkit
Centralizes numerical defaults, reproducibility settings and logging
"""

import os
import sys
import logging
from typing import Dict, Any, Optional
from dotenv import load_dotenv

# Load environment variables
load_dotenv()

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
VALID_LOG_LEVELS = ('DEBUG', 'INFO', 'WARNING', 'ERROR', 'CRITICAL')

# Relative separation floor between distinct rates
SEPARATION = 1e-6

# Search box for rate estimation
RATE_LOWER_BOUND = 1e-8
RATE_UPPER_BOUND = 1e8


class Config:
    """Main configuration class"""

    def __init__(self, environ: Optional[Dict[str, str]] = None):
        env = os.environ if environ is None else environ

        # Logging Configuration
        self.LOG_LEVEL = env.get('HYPOXG_LOG_LEVEL', 'WARNING').upper()
        self.LOG_FILE = env.get('HYPOXG_LOG_FILE') or None

        # Reproducibility
        self.DEFAULT_SEED = int(env.get('HYPOXG_SEED', 0))

        # Estimation Configuration
        self.RESTARTS = int(env.get('HYPOXG_RESTARTS', 8))
        self.MAX_EVALUATIONS = int(env.get('HYPOXG_MAX_EVALUATIONS', 100000))
        self.REL_TOLERANCE = float(env.get('HYPOXG_REL_TOLERANCE', 1e-10))
        self.WORKERS = int(env.get('HYPOXG_WORKERS', 1))

        # Output Configuration
        self.OUTPUT_DIGITS = int(env.get('HYPOXG_OUTPUT_DIGITS', 15))

        self.SEPARATION = SEPARATION
        self.RATE_BOUNDS = (RATE_LOWER_BOUND, RATE_UPPER_BOUND)

    def validate_config(self) -> Dict[str, Any]:
        """Validate configuration and return status"""
        status = {
            'logging_configured': self.LOG_LEVEL in VALID_LOG_LEVELS,
            'estimation_configured': self.RESTARTS >= 1 and self.MAX_EVALUATIONS >= 1,
            'errors': []
        }

        if not status['logging_configured']:
            status['errors'].append(f'Unknown log level {self.LOG_LEVEL!r}')

        if self.RESTARTS < 1:
            status['errors'].append('HYPOXG_RESTARTS must be at least 1')

        if self.MAX_EVALUATIONS < 1:
            status['errors'].append('HYPOXG_MAX_EVALUATIONS must be at least 1')

        if self.WORKERS < 1:
            status['errors'].append('HYPOXG_WORKERS must be at least 1')

        if self.OUTPUT_DIGITS < 12:
            status['errors'].append('HYPOXG_OUTPUT_DIGITS must be at least 12')

        return status


class LoggingConfig:
    """Logging configuration"""

    _configured = False

    @staticmethod
    def setup_logging(config: Config, level: Optional[str] = None) -> logging.Logger:
        """Setup logging configuration"""
        level_name = (level or config.LOG_LEVEL).upper()
        if level_name not in VALID_LOG_LEVELS:
            level_name = 'WARNING'

        # stdout carries emitted documents, so console logs go to stderr
        handlers = [logging.StreamHandler(sys.stderr)]
        if config.LOG_FILE:
            handlers.append(logging.FileHandler(config.LOG_FILE, encoding='utf-8'))

        logging.basicConfig(
            level=getattr(logging, level_name),
            format=LOG_FORMAT,
            handlers=handlers,
            force=not LoggingConfig._configured
        )
        LoggingConfig._configured = True

        logger = logging.getLogger('hypoxg')
        logger.setLevel(getattr(logging, level_name))
        logger.debug("Logging initialized")
        return logger


# Global configuration instance
config = Config()

# Export commonly used items
__all__ = ['config', 'Config', 'LoggingConfig', 'SEPARATION',
           'RATE_LOWER_BOUND', 'RATE_UPPER_BOUND']
