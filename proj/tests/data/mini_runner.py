"""Small stand-in for pytest: runs test_* functions of test_*.py in the cwd
and prints a pytest-style summary line."""
import glob
import importlib.util
import sys
import traceback

sys.path.insert(0, ".")
passed = failed = errors = 0
for path in sorted(glob.glob("test_*.py")):
    spec = importlib.util.spec_from_file_location(path[:-3], path)
    mod = importlib.util.module_from_spec(spec)
    try:
        spec.loader.exec_module(mod)
    except Exception:
        traceback.print_exc()
        errors += 1
        continue
    for name in sorted(n for n in dir(mod) if n.startswith("test_")):
        fn = getattr(mod, name)
        if not callable(fn):
            continue
        try:
            fn()
            passed += 1
        except AssertionError:
            print(f"FAILED {path}::{name}")
            traceback.print_exc(file=sys.stdout)
            failed += 1
        except Exception:
            print(f"ERROR {path}::{name}")
            traceback.print_exc(file=sys.stdout)
            errors += 1

parts = []
if failed:
    parts.append(f"{failed} failed")
if passed:
    parts.append(f"{passed} passed")
if errors:
    parts.append(f"{errors} errors")
print(", ".join(parts) or "no tests ran")
sys.exit(0 if passed and not failed and not errors else (1 if failed or errors else 5))
