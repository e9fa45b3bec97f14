import sys

from polariton.cli import main

sys.exit(main())
