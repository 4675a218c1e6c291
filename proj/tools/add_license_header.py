#!/usr/bin/env python3
"""Prepends cmake/license_header.txt to C/C++ sources that lack it.

usage: add_license_header.py [--check]

With --check, lists files missing the header and exits 1 if there are any.
"""
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
DIRS = ("src", "include", "tools", "tests")
SUFFIXES = {".cpp", ".hpp", ".h"}


def main():
    check = "--check" in sys.argv[1:]
    header = (ROOT / "cmake" / "license_header.txt").read_text()
    first_line = header.splitlines()[0]
    missing = []
    for d in DIRS:
        for path in sorted((ROOT / d).rglob("*")):
            if path.suffix not in SUFFIXES or not path.is_file():
                continue
            text = path.read_text()
            if text.startswith(first_line):
                continue
            missing.append(path)
            if not check:
                path.write_text(header + "\n" + text)
    for path in missing:
        print(path.relative_to(ROOT))
    if check and missing:
        sys.exit(1)


if __name__ == "__main__":
    main()
