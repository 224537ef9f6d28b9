import sys

from trace_ratio_duality.run_pipeline import main

if __name__ == "__main__":
    sys.exit(main())
