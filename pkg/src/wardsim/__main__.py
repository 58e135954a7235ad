import sys

from wardsim.cli import main

sys.exit(main())
