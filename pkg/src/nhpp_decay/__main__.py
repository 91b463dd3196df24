import sys

from nhpp_decay.cli import main

sys.exit(main())
