"""
csergo - ergodic analysis of probabilistic concurrent systems
"""

__version__ = '1.0.0'
