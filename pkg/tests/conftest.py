import sys
from pathlib import Path

# make tests/ helpers (strategies, oracles) importable as plain modules
sys.path.insert(0, str(Path(__file__).parent))
