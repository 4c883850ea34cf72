import sys

from gpspr.cli import main

sys.exit(main())
