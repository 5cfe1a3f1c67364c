#!/usr/bin/env python3
"""
patternstat launch script
"""

import sys

from patternstat.cli import main

if __name__ == "__main__":
    sys.exit(main())
