#!/usr/bin/env python3
"""Write tests/golden/report.txt and report.json from the golden dataset.

Run only after tools/make_oracle.py and the acceptance suite confirm the
pipeline agrees with the independent oracle; these files then pin the CLI
output byte-for-byte.
"""

from __future__ import annotations

from pathlib import Path

from panelsur.io import read_config
from panelsur.report import emit_report
from panelsur.study import replicate

ROOT = Path(__file__).resolve().parent.parent


def main() -> None:
    config = read_config(ROOT / "data" / "golden" / "config.cfg")
    bundle = replicate(config)
    out = ROOT / "tests" / "golden"
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.txt").write_text(emit_report(bundle, "text"), encoding="utf-8")
    (out / "report.json").write_text(emit_report(bundle, "json"), encoding="utf-8")
    print(f"wrote {out / 'report.txt'} and {out / 'report.json'}")


if __name__ == "__main__":
    main()
