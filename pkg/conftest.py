import pathlib
import sys

# Allow running the test suite from a source checkout without installation.
_src = pathlib.Path(__file__).parent / "src"
if _src.is_dir() and str(_src) not in sys.path:
    sys.path.insert(0, str(_src))
