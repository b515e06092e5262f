"""
Tests for configuration, logging setup and the error hierarchy
"""
import logging
import os
import tempfile
import unittest

from hypoxg.config import Config, LoggingConfig, SEPARATION, RATE_LOWER_BOUND, RATE_UPPER_BOUND
from hypoxg.errors import (
    BudgetError, ConfigError, DataError, HypoXGError, NumericError, SeparationError,
)


class TestConfig(unittest.TestCase):
    def test_defaults(self):
        """An empty environment gives the documented defaults"""
        config = Config(environ={})
        self.assertEqual(config.LOG_LEVEL, 'WARNING')
        self.assertIsNone(config.LOG_FILE)
        self.assertEqual(config.DEFAULT_SEED, 0)
        self.assertEqual(config.RESTARTS, 8)
        self.assertEqual(config.MAX_EVALUATIONS, 100000)
        self.assertEqual(config.REL_TOLERANCE, 1e-10)
        self.assertEqual(config.WORKERS, 1)
        self.assertEqual(config.OUTPUT_DIGITS, 15)
        self.assertEqual(config.SEPARATION, SEPARATION)
        self.assertEqual(config.RATE_BOUNDS, (RATE_LOWER_BOUND, RATE_UPPER_BOUND))

    def test_environment_overrides(self):
        """HYPOXG_* variables override the defaults"""
        config = Config(environ={
            'HYPOXG_LOG_LEVEL': 'debug',
            'HYPOXG_SEED': '17',
            'HYPOXG_RESTARTS': '12',
            'HYPOXG_WORKERS': '4',
        })
        self.assertEqual(config.LOG_LEVEL, 'DEBUG')
        self.assertEqual(config.DEFAULT_SEED, 17)
        self.assertEqual(config.RESTARTS, 12)
        self.assertEqual(config.WORKERS, 4)

    def test_validate_config_valid(self):
        """Defaults validate cleanly"""
        status = Config(environ={}).validate_config()
        self.assertTrue(status['logging_configured'])
        self.assertTrue(status['estimation_configured'])
        self.assertEqual(status['errors'], [])

    def test_validate_config_errors(self):
        """Each out-of-range setting is reported"""
        config = Config(environ={
            'HYPOXG_LOG_LEVEL': 'LOUD',
            'HYPOXG_RESTARTS': '0',
            'HYPOXG_WORKERS': '0',
            'HYPOXG_OUTPUT_DIGITS': '6',
        })
        status = config.validate_config()
        self.assertFalse(status['logging_configured'])
        self.assertFalse(status['estimation_configured'])
        self.assertEqual(len(status['errors']), 4)


class TestLoggingConfig(unittest.TestCase):
    def tearDown(self):
        logging.getLogger().handlers.clear()

    def test_setup_logging(self):
        """Returns the package logger at the configured level"""
        logger = LoggingConfig.setup_logging(Config(environ={'HYPOXG_LOG_LEVEL': 'INFO'}))
        self.assertEqual(logger.name, 'hypoxg')
        self.assertEqual(logger.level, logging.INFO)

    def test_level_override(self):
        """An explicit level wins over the environment"""
        logger = LoggingConfig.setup_logging(Config(environ={}), level='debug')
        self.assertEqual(logger.level, logging.DEBUG)

    def test_log_file(self):
        """HYPOXG_LOG_FILE adds a file handler"""
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'hypoxg.log')
            LoggingConfig._configured = False
            logger = LoggingConfig.setup_logging(Config(environ={'HYPOXG_LOG_FILE': path}), level='INFO')
            logger.info("fit finished")
            for handler in logging.getLogger().handlers:
                handler.flush()
            with open(path, encoding='utf-8') as handle:
                self.assertIn("fit finished", handle.read())
            for handler in logging.getLogger().handlers:
                handler.close()


class TestErrors(unittest.TestCase):
    def test_categories_and_exit_codes(self):
        """Each error maps to its category and exit status"""
        cases = [
            (ConfigError('bad flag'), 'config', 2),
            (DataError('bad value'), 'data', 3),
            (NumericError('out of domain'), 'numeric', 4),
            (SeparationError('too close'), 'numeric', 4),
            (BudgetError('too many steps'), 'budget', 4),
        ]
        for error, category, code in cases:
            self.assertIsInstance(error, HypoXGError)
            self.assertEqual(error.category, category)
            self.assertEqual(error.exit_code, code)
            self.assertTrue(error.describe().startswith(f'{category}: '))

    def test_data_error_line(self):
        """Line numbers prefix data error messages"""
        error = DataError("non-numeric token 'x'", line=7)
        self.assertEqual(error.line, 7)
        self.assertEqual(error.describe(), "data: line 7: non-numeric token 'x'")

    def test_value_error_compatibility(self):
        """Domain errors remain ValueErrors"""
        self.assertTrue(issubclass(NumericError, ValueError))
        self.assertTrue(issubclass(DataError, ValueError))


if __name__ == '__main__':
    unittest.main()
