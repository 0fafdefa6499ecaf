#!/usr/bin/env python3
"""
Entry point for qworkstat package when run as python -m qworkstat
"""

from .qworkstat import main

if __name__ == "__main__":
    main()
