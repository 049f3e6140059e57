#!/usr/bin/env python3
# tools/make_stats_reference.py

# Copyright 2026  The kws-engine Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#  http://www.apache.org/licenses/LICENSE-2.0
#
# THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
# KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
# WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
# MERCHANTABLITY OR NON-INFRINGEMENT.
# See the Apache 2 License for the specific language governing permissions and
# limitations under the License.

"""Writes reference paired t-test and Wilcoxon signed-rank results from SciPy.

Ten fixed vector pairs are drawn from a seeded generator and rounded to three
decimals, so the C++ side reads back exactly the same numbers. Pairs with fewer
than ten non-zero differences avoid tied magnitudes and use the exact null
distribution; the rest use the normal approximation with continuity and tie
correction. Usage: make_stats_reference.py OUT.json
"""
import json
import sys

import numpy as np
import scipy
from scipy import stats

# (n, kind): "plain" draws continuous values, "ties" rounds the differences to
# one decimal, "zero" forces one zero difference.
CASES = [(5, "plain"), (6, "plain"), (8, "plain"), (9, "plain"), (10, "plain"),
         (12, "plain"), (20, "plain"), (20, "ties"), (15, "zero"), (30, "plain")]


def draw(rng, n, kind):
    while True:
        a = np.round(rng.normal(0.3, 0.4, n), 3)
        d = rng.normal(0.1, 0.3, n)
        if kind == "ties":
            d = np.round(d, 1)
        b = np.round(a - d, 3)
        if kind == "zero":
            b[3] = a[3]
        diff = np.round(a - b, 3)
        nz = np.abs(diff[diff != 0])
        if len(nz) < 10 and len(set(nz.tolist())) != len(nz):
            continue  # exact enumeration needs distinct magnitudes
        if kind == "ties" and len(set(nz.tolist())) == len(nz):
            continue
        return a, b


def main(path):
    rng = np.random.default_rng(20240611)
    out = []
    for n, kind in CASES:
        a, b = draw(rng, n, kind)
        t = stats.ttest_rel(a, b)
        n_eff = int(np.count_nonzero(np.round(a - b, 12)))
        method = "exact" if n_eff < 10 else "approx"
        w = stats.wilcoxon(a, b, zero_method="wilcox", correction=True, method=method)
        out.append({
            "a": a.tolist(), "b": b.tolist(), "method": method, "n_eff": n_eff,
            "t_stat": float(t.statistic), "t_pvalue": float(t.pvalue),
            "w_stat": float(w.statistic), "w_pvalue": float(w.pvalue),
        })
    with open(path, "w") as f:
        json.dump({"scipy": scipy.__version__, "pairs": out}, f, indent=1)
        f.write("\n")


if __name__ == "__main__":
    main(sys.argv[1])
