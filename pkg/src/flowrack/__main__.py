import sys

from flowrack.cli import main

sys.exit(main())
