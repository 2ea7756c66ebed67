#!/usr/bin/env python3
"""
csergo - ergodic analysis of probabilistic concurrent systems
Entry point for the command-line interface
"""

import sys

from orchestration.pipeline_controller import main

if __name__ == "__main__":
    sys.exit(main())
