import sys

from tripletsim import cli

sys.exit(cli.main())
