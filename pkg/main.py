"""
Main Entry Point for the HypoXG toolkit
Usage: python main.py <eval|fit|sample|compare|curves> [options]
"""

import sys

from hypoxg.cli import main

if __name__ == '__main__':
    sys.exit(main())
