import sys

from depthfc.cli import main

sys.exit(main())
