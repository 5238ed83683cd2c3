#!/usr/bin/env python3
"""Regenerate resources/corpus/checksums.json after editing corpus files."""
import hashlib
import json
import pathlib
import sys

root = pathlib.Path(sys.argv[1] if len(sys.argv) > 1 else "resources/corpus")
files = {}
for p in sorted(root.rglob("*")):
    rel = p.relative_to(root).as_posix()
    if not p.is_file() or rel == "checksums.json" or "__pycache__" in rel:
        continue
    files[rel] = hashlib.sha256(p.read_bytes()).hexdigest()
(root / "checksums.json").write_text(json.dumps({"files": files}, indent=2, sort_keys=True) + "\n")
print(f"{len(files)} files")
