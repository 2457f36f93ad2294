"""
h-based versus o-based rankings
===============================

Rank the same researchers by h and by o and measure how far apart the two
orders are (Kendall tau and per-researcher rank moves).
"""
from citerank.metrics import normalize_record, summarize, summarize_all
from citerank.ranking import compare_rankings, rank_by
from citerank.synth import LogUniform, Lognormal, PopulationConfig, generate_population

# Two records shaped like the published numbers: similar C, very different N and m.
perdew = normalize_record("Perdew", [37641] + [2000] * 40 + [300] * 34 + [60] * 242)
heeger = normalize_record("Heeger", [5482] + [900] * 60 + [200] * 49 + [60] * 1174)
pair = [summarize(perdew), summarize(heeger)]
for metric in ("h", "o"):
    table = rank_by(pair, metric)
    print(metric, [(e.rank, e.researcher_id, round(e.value, 1)) for e in table.entries])

###############################################################################
people = summarize_all(generate_population(
    PopulationConfig(2000, LogUniform(20, 2000), Lognormal(1.0, 2.0), seed=11)))
by_h, by_o = rank_by(people, "h"), rank_by(people, "o")
cmp = compare_rankings(by_h, by_o)
print(f"Kendall tau(h, o) = {cmp.kendall_tau:.3f}")
print("largest moves (rank under h - rank under o):")
ranks_h, ranks_o = by_h.rank_of(), by_o.rank_of()
for rid, d in cmp.largest_moves(5):
    print(f"  {rid:12s} h-rank {ranks_h[rid]:5d}  o-rank {ranks_o[rid]:5d}  moved {d:+d}")
