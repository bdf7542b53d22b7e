import sys

from meshwalk.cli import main

sys.exit(main())
