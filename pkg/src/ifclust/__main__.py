"""Allow `python -m ifclust`."""

import sys

from .cli import main

sys.exit(main())
