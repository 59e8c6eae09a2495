"""Entry point for python -m adipal"""

from adipal.cli import main

if __name__ == "__main__":
    main()
