import sys

from rudvalis.cli import main

sys.exit(main())
