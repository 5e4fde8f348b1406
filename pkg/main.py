"""
Main Entry Point for the mesh-clustered GP toolkit.

Loads a .env file (MCGP_* overrides) before anything reads config.settings,
then hands the command line to the CLI.

Usage:
    python main.py generate --out data/train --h 0.2 --equispaced 5
    python main.py fit --data data/train --out models/mcgp
"""
import sys

from dotenv import load_dotenv


def main() -> int:
    load_dotenv()
    # Imported after load_dotenv so settings see the .env values
    from src.cli.app import run
    return run(sys.argv[1:])


if __name__ == "__main__":
    sys.exit(main())
