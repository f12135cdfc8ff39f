"""Periodicity, trend and seasonality of each solar feature.

Reads an hourly CSV (or synthesizes a year when ``--input`` is omitted) and
prints one row per feature over the 7am-7pm window.

    python scripts/characterize_features.py --seed 0
    python scripts/characterize_features.py --input data/golden_2023.csv
"""

from __future__ import annotations

import argparse

from hsforecast import solar
from hsforecast.cli import characterize_csv
from hsforecast.ingest import SynthConfig, generate_synthetic, parse_csv


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--input", help="hourly CSV; synthetic year when omitted")
    ap.add_argument("--site", default=solar.NREL_GOLDEN.format(), help="lat,lon,elev,utc")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--ghi-only", action="store_true")
    args = ap.parse_args()

    site = solar.SiteConfig.parse(args.site)
    if args.input:
        with open(args.input, "rb") as fh:
            series = parse_csv(fh, site, ghi_only=args.ghi_only)
    else:
        series = generate_synthetic(SynthConfig(site=site, seed=args.seed))
    print(characterize_csv(series, args.ghi_only), end="")


if __name__ == "__main__":
    main()
