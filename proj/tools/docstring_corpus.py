#!/usr/bin/env python3
"""Write the docstrings of installed Python modules to one text file."""

import argparse
import ast
import os
import site
import sys
import sysconfig


def default_roots():
    roots = [sysconfig.get_paths()["stdlib"]]
    roots += site.getsitepackages()
    return [r for r in dict.fromkeys(roots) if os.path.isdir(r)]


def docstrings(path):
    try:
        with open(path, encoding="utf-8") as f:
            tree = ast.parse(f.read())
    except (SyntaxError, UnicodeDecodeError, ValueError, OSError):
        return
    for node in ast.walk(tree):
        if isinstance(node, (ast.Module, ast.ClassDef, ast.FunctionDef, ast.AsyncFunctionDef)):
            doc = ast.get_docstring(node)
            if doc:
                yield doc


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("out")
    parser.add_argument("roots", nargs="*", help="directories to scan (default: stdlib and site-packages)")
    args = parser.parse_args()

    words = 0
    with open(args.out, "w", encoding="utf-8") as out:
        for root in args.roots or default_roots():
            for dirpath, dirnames, filenames in os.walk(root):
                dirnames.sort()
                for name in sorted(filenames):
                    if not name.endswith(".py"):
                        continue
                    for doc in docstrings(os.path.join(dirpath, name)):
                        out.write(doc + "\n")
                        words += len(doc.split())
    print(f"{words} tokens written to {args.out}", file=sys.stderr)


if __name__ == "__main__":
    main()
