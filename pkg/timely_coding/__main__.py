"""Allow ``python -m timely_coding``."""

import sys

from .cli import main

sys.exit(main())
