"""Smoke test for the Python bindings: python3 python/smoke_test.py (or pytest)."""

import json
import math

import bnfourier as bf


def test_net_round_trip_and_report():
    net = bf.BayesNet.chain(0.3, [(0.2, 0.4), (0.5, 0.6)])
    assert net.n == 3
    rep = net.validate()
    assert rep["structure"] == "chain"
    assert math.isclose(rep["c_star"], 0.2)
    back = bf.BayesNet.from_json(net.to_json())
    assert back.to_json() == net.to_json()
    total = sum(net.joint_prob(x) for x in range(8))
    assert math.isclose(total, 1.0, abs_tol=1e-12)


def test_spectrum_and_norms():
    net = bf.BayesNet.random("chain", 6, seed=3, c=0.1, alpha=0.2)
    assert bf.orthonormality_residual(net) < 1e-10
    lits = [1, -3, 5]
    assert abs(bf.chain_spectral_norm(net, lits) - bf.conjunction_l1(net, lits)) < 1e-9
    assert math.isclose(bf.product_spectral_norm([0.9], [1]), 1.2)
    table = [1.0 if x & 1 else -1.0 for x in range(64)]
    coeffs = dict(bf.spectrum(net, table))
    assert sum(c * c for c in coeffs.values()) > 0.99


def test_km_finds_planted_parity():
    net = bf.BayesNet.product([0.5] * 6)
    table = [(-1.0) ** bin(x & 0b101).count("1") for x in range(64)]
    found = bf.km_search(net, table, theta=0.5, gamma=0.1)
    assert [m for m, _ in found] == [0b101]


def test_learners():
    net = bf.BayesNet.random("tree", 8, seed=1, c=0.2, alpha=0.1)
    dnf = bf.Dnf.random_tree(8, 3, seed=4)
    out = bf.learn_dnf(net, dnf, epsilon=0.1)
    assert out["error"] <= 0.1
    hidden = bf.BayesNet.random("chain", 5, seed=2, c=0.2, alpha=0.3)
    learned = bf.learn_tree(5, hidden.sample(20000, seed=7), algorithm="diff", c=0.1)
    assert bf.kl(hidden, learned) < 0.05


def test_harness():
    rows = bf.lower_bound_certificates()
    assert len(rows) == 3 and all(r[4] for r in rows)
    recs = json.loads(bf.run_experiment(json.dumps({"experiment": "oracle-check", "seed": 1})))
    assert all(r["pass"] for r in recs)


if __name__ == "__main__":
    for name, fn in list(globals().items()):
        if name.startswith("test_"):
            fn()
            print("ok", name)
