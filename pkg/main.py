#!/usr/bin/env python3
# lrgmp - root-level launcher shim
# Delegates to the real entry point: lrgmp/main.py
# Usage: python main.py <subcommand> ...  (from project root)

import sys

from lrgmp.main import main

if __name__ == "__main__":
    sys.exit(main())
