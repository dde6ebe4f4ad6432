import sys

from ddclab.cli import main

sys.exit(main())
