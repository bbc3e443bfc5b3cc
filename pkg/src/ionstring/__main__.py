import sys

from ionstring.cli import main

sys.exit(main())
