"""Entry point for ``python -m gkit``."""
from gkit.cli import main

if __name__ == "__main__":
    main()
