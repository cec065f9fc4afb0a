import sys

from haptotaxis.cli import main

sys.exit(main())
