"""
Citation metrics for a single researcher
========================================

Walk through the quantities computed for one citation record: paper count
N, total citations C, top-paper citations m, mean <c> = C/N, the h-index
and the o-index o = sqrt(m h).
"""
import math

from citerank.metrics import h_index, normalize_record, o_index, round_half_up, summarize

# Raw per-paper counts in any order; the record ranks them.
record = normalize_record("demo", [3, 10, 4, 8, 5])
print(record)

# h is the largest rank r whose paper has at least r citations.
for r, c in enumerate(record.counts.tolist(), start=1):
    print(f"rank {r}: {c:3d} citations  {'>=' if c >= r else '< '} {r}")
print("h =", h_index(record))

s = summarize(record)
print(f"N={s.N} C={s.C} m={s.m} <c>={s.mean_c} h={s.h} o={s.o:.4f} h/sqrt(C)={s.h_ratio:.4f}")

# sqrt(C) is the largest possible h; h/sqrt(C) measures how close a record gets.
print("upper bound isqrt(C) =", math.isqrt(s.C))

###############################################################################
# A heavy top paper barely moves h but lifts o.
one_hit = normalize_record("one-hit", [5000, 6, 5, 5, 4, 3, 2, 1])
steady = normalize_record("steady", [12] * 12 + [2] * 40)
for rec in (one_hit, steady):
    s = summarize(rec)
    print(f"{rec.researcher_id:8s} C={s.C:5d} N={s.N:3d} h={s.h:2d} o={round_half_up(o_index(rec)):4d}")
