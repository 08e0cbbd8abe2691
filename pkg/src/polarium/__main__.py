import sys

from polarium.cli import main

sys.exit(main())
