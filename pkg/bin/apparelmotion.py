#!/usr/bin/env python3
"""Generate data for, train, run and evaluate apparel-aware motion transfer"""
import sys

from apparelmotion.cli import main

if __name__ == "__main__":
    sys.exit(main())
