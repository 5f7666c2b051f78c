import sys

from sigstop.cli import main

sys.exit(main())
