# main.py
import sys

from robust_capacity.cli import main

if __name__ == "__main__":
    sys.exit(main())
