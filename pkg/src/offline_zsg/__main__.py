"""Allow running the package as a module: python -m offline_zsg"""

from .cli import main

if __name__ == "__main__":
    main()
