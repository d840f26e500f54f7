import sys

from frictionless_bec.cli import main

sys.exit(main())
