#!/usr/bin/env python3
"""
fringeforge - entry point.

    python main.py <simulate|wrap|unwrap|calibrate|reconstruct|fit|uncertainty|report> --config config.json
"""

import sys
import os
import logging

logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
    stream=sys.stderr,
)

# Import paths
sys.path.insert(0, os.path.join(os.path.dirname(__file__), 'src'))


def main():
    from controllers.cli import main as cli_main
    sys.exit(cli_main(sys.argv[1:]))


if __name__ == "__main__":
    main()
