#!/usr/bin/env python3
"""
RegretLab CLI entry point.

Allows running: python -m regretlab <command>
"""

import sys

from regretlab.cli import main

if __name__ == "__main__":
    sys.exit(main())
