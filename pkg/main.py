import sys
import os

# Add current directory to path for imports
sys.path.append(os.path.dirname(os.path.abspath(__file__)))

from scenario_cli import main

if __name__ == '__main__':
    sys.exit(main())
