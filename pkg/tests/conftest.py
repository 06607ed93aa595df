import sys
from pathlib import Path

# expose sibling oracle helpers (lp_oracles, instance factories) to the tests
sys.path.insert(0, str(Path(__file__).parent))
