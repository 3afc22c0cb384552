"""Print the count tables (model vs printed values) and the errata report.

    python scripts/reproduce_tables.py [--format md|csv|json] [--out PATH]
"""

import argparse
from pathlib import Path

from mvqsd.tables import render


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--format", choices=("md", "csv", "json"), default="md")
    p.add_argument("--out")
    a = p.parse_args()
    text = render(a.format)
    if a.out:
        Path(a.out).write_text(text, encoding="utf-8")
    else:
        print(text, end="")


if __name__ == "__main__":
    main()
