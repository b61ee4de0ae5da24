import sys

from blds.cli import main

sys.exit(main())
