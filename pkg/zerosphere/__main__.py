"""Allow running zerosphere as a module: python -m zerosphere."""

from zerosphere.cli import main

raise SystemExit(main())
