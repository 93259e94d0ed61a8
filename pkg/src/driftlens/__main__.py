import sys

from driftlens.cli import main

sys.exit(main())
