import sys

from curloc.runner.cli import main

sys.exit(main())
