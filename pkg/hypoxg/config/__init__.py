"""Configuration settings for the HypoXG toolkit"""

from .settings import config, Config, LoggingConfig, SEPARATION, RATE_LOWER_BOUND, RATE_UPPER_BOUND

__all__ = ['config', 'Config', 'LoggingConfig', 'SEPARATION',
           'RATE_LOWER_BOUND', 'RATE_UPPER_BOUND']
