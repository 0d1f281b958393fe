# Load a CSV catalog, report what each column holds.
#
# The parser infers numeric vs categorical per column, counts missing
# cells, and computes stats over the present values only.

import numpy as np

from hyperviz import Catalog, column_stats, format_float_shortest, parse_catalog

rng = np.random.default_rng(42)

# A small survey table: two coordinates, a brightness, and a class label.
# Blank cells and "NA" tokens both count as missing.
rows = ["ra_deg,dec_deg,mag,kind"]
for i in range(200):
    ra = rng.uniform(0.0, 360.0)
    dec = rng.uniform(-90.0, 90.0)
    mag = rng.normal(14.0, 2.0)
    kind = rng.choice(["star", "galaxy", "quasar"])
    cells = [f"{ra:.4f}", f"{dec:.4f}", f"{mag:.2f}", kind]
    if i % 17 == 0:
        cells[2] = ""  # drop some magnitudes
    if i % 29 == 0:
        cells[3] = "NA"
    rows.append(",".join(cells))
csv_text = "\n".join(rows) + "\n"

catalog = parse_catalog(csv_text.encode("utf-8"))
print(f"parsed {catalog.n_rows} rows, {len(catalog.column_names)} columns")

for name in catalog.column_names:
    col = catalog.column(name)
    stats = column_stats(col)
    missing = catalog.n_rows - stats.n_present
    if col.kind == "numeric":
        print(
            f"  {name}: numeric present={stats.n_present} missing={missing} "
            f"min={format_float_shortest(stats.min)} "
            f"max={format_float_shortest(stats.max)} "
            f"mean={format_float_shortest(stats.mean)}"
        )
    else:
        print(
            f"  {name}: categorical present={stats.n_present} missing={missing} "
            f"distinct={len(stats.distinct_categories)} "
            f"values={stats.distinct_categories}"
        )

# Catalogs can also be built straight from arrays, skipping CSV.
direct = Catalog.from_arrays({"x": rng.random(5), "y": rng.random(5)})
print(f"from_arrays: {direct.n_rows} rows, columns {direct.column_names}")
