"""Smoke test for the afpo Python extension.

Build and install first:

    cd crates/py && maturin build --release -o dist && pip install dist/afpo-*.whl

then run ``python python/smoke_test.py`` from the repository root.
"""

import math
import sys
from pathlib import Path

import afpo


def compound(lam, r, q):
    return afpo.Distribution.compound_poisson(lam, afpo.Distribution.negbinom(r, q))


def check(label, ok, detail=""):
    print(f"{'ok  ' if ok else 'FAIL'} {label} {detail}")
    return ok


def main():
    results = []

    geo = afpo.Distribution.negbinom(1, 0.5)
    results.append(check("geometric mean", abs(geo.mean() - 1.0) < 1e-10, f"{geo.mean():.12f}"))

    a = afpo.Distribution([0.2, 0.5, 0.3])
    b = afpo.Distribution([0.6, 0.4])
    c = afpo.convolve(a, b)
    brute = [0.0] * 4
    for i, p in enumerate(a.pmf):
        for j, q in enumerate(b.pmf):
            brute[i + j] += p * q
    results.append(check("convolution", max(abs(x - y) for x, y in zip(c.pmf, brute)) < 1e-12))

    crra2 = afpo.Disutility.crra(2.0)
    results.append(check("inverse marginal", abs(crra2.inverse_marginal(9.0) - 3.0) < 1e-15))

    members = [
        ("p1", compound(0.13, 1, 0.41), crra2),
        ("p2", compound(1.97, 4, 0.47), crra2),
        ("p3", compound(0.26, 4, 0.41), crra2),
        ("p4", compound(0.01, 4, 0.45), crra2),
    ]
    pool = afpo.Pool(members)
    sol = pool.solve()
    es = sum(pool.expected_losses)
    worst = max(
        abs(h[k] - ex / es * k * sol.step)
        for h, ex in zip(sol.h, pool.expected_losses)
        for k in range(len(h))
    )
    results.append(check("equicautious pool converges", sol.converged and sol.iterations <= 2, repr(sol)))
    results.append(check("mean-proportional rule", worst <= 1e-6 * pool.aggregate.max_support, f"{worst:.2e}"))

    phi = pool.phi(sol.alpha)
    eig = max(abs(x - y) for x, y in zip(phi, sol.alpha)) / max(sol.alpha)
    results.append(check("eigenvalue one", eig <= 1e-8, f"{eig:.2e}"))

    holds, ratio = pool.verify_contraction(samples=20, seed=3)
    results.append(check("Hilbert contraction", holds, f"worst ratio {ratio:.3g}"))
    results.append(check("Hilbert distance", abs(afpo.hilbert_distance([2.0, 1.0], [1.0, 1.0]) - math.log(2)) < 1e-15))

    s = afpo.Distribution([0.3, 0.0, 0.5, 0.2])
    closed = afpo.two_crra_solution(1.0, s, s.mean() / 2)
    pair = afpo.Pool([
        ("one", afpo.Distribution([0.5, 0.2, 0.3]), afpo.Disutility.crra(1.0)),
        ("two", afpo.Distribution([0.1, 0.6, 0.3]), afpo.Disutility.crra(2.0)),
    ])
    pair_sol = pair.solve()
    oracle = afpo.two_crra_solution(1.0, pair.aggregate, pair.expected_losses[1])
    gap = max(abs(x - y) for x, y in zip(pair_sol.alpha, oracle["alpha_tilde"]))
    results.append(check("two-CRRA closed form", closed["a"] > 0 and gap < 1e-8, f"alpha gap {gap:.2e}"))

    base = [compound(0.1, 2, 0.42), compound(0.4, 7, 0.5), compound(0.2, 6, 0.45)]
    wide = [base[0], compound(0.4, 3, 0.3), base[2]]
    pools = [afpo.Pool([(f"p{i + 1}", d, crra2) for i, d in enumerate(ds)]) for ds in (base, wide)]
    sols = [p.solve() for p in pools]
    cmp = afpo.compare_shares(sols[0].h[1], pools[0].aggregate, sols[1].h[1], pools[1].aggregate)
    results.append(check("convex order of shares", cmp["verdict"] == "cx-smaller" and cmp["sign_changes"] == 1, str(cmp)))

    config = Path(__file__).resolve().parent.parent / "configs" / "mixed_crra.toml"
    if config.exists():
        import json
        import tempfile
        import shutil

        with tempfile.TemporaryDirectory() as tmp:
            local = Path(tmp) / config.name
            shutil.copy(config, local)
            converged, report = afpo.solve_config(str(local))
            alpha = json.loads(Path(report).read_text())["alpha"]
        results.append(check("config solve", converged and abs(alpha[0] - 0.62) < 0.02, str([round(x, 3) for x in alpha])))

    failed = results.count(False)
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
