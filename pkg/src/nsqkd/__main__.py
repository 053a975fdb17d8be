import sys

from nsqkd.cli import main

sys.exit(main())
