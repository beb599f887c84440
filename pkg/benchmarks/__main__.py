# `python -m benchmarks`
import sys

import benchmarks

try:
    benchmarks.main()
except KeyboardInterrupt:
    sys.exit(1)
