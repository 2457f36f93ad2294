"""
Files in, figure data out
=========================

Write a synthetic population to the records CSV format, read it back, and
emit the two figure-data tables (h/sqrt(C) vs sqrt(C) coloured by <c>, and
o vs h) for an external plotting tool.
"""
import csv
import tempfile
from pathlib import Path

from citerank.ingest import load_records, write_csv
from citerank.metrics import summarize_all
from citerank.ranking import emit_fig1_data, emit_fig2_data
from citerank.synth import Geometric, PopulationConfig, Uniform, generate_population

out = Path(tempfile.mkdtemp(prefix="citerank-demo-"))

records = generate_population(PopulationConfig(50, Uniform(0, 40), Geometric(0.1), seed=3))
with open(out / "records.csv", "w", newline="") as fh:
    write_csv(records, fh)
assert load_records(out / "records.csv") == records

people = summarize_all(records)
with open(out / "fig1.csv", "w", newline="") as fh:
    n1 = emit_fig1_data(people, fh)
with open(out / "fig2.csv", "w", newline="") as fh:
    n2 = emit_fig2_data(people, fh)
print(f"{n1} fig1 rows, {n2} fig2 rows in {out}")

with open(out / "fig1.csv") as fh:
    for row in list(csv.DictReader(fh))[:3]:
        print(row)

# The same files from the shell:
#   citerank simulate -o records.csv --n-researchers 50 --papers uniform:0,40 --citations geometric:0.1 --seed 3
#   citerank metrics records.csv --fig1 fig1.csv --fig2 fig2.csv
#   citerank fit fig1.csv
