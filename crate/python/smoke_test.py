"""Smoke test for the geoground Python extension.

Run after building the extension so that `geoground` is importable, e.g.
`maturin develop -m crates/python/Cargo.toml` or by putting the built
shared library on PYTHONPATH as geoground.so.
"""

import math
import random

import geoground as gg


def close(a, b, tol=1e-9):
    return abs(a - b) <= tol


def main():
    # Sphere geometry.
    v = gg.normalize([3.0, 4.0, 0.0])
    assert close(v[0], 0.6) and close(v[1], 0.8)
    assert close(gg.angular_distance([1, 0, 0], [0, 1, 0]), math.pi / 2)
    q, c, r = [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 1.0, 0.0]
    assert close(gg.sgi(q, c, r), 1.0)
    lo_slack, hi_slack = gg.triangle_residuals(q, c, r)
    assert lo_slack >= -1e-12 and hi_slack >= -1e-12
    lo, hi = gg.sgi_bounds(math.pi / 2, math.pi / 4)
    assert close(lo, 1.0) and close(hi, 3.0)

    # Calibration and Gamma on a planted direction.
    scale = 1 / math.sqrt(2)
    qs = [[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0]]
    rs = [[scale, 0.0, scale, 0.0], [0.0, scale, scale, 0.0]]
    direction = gg.calibrate(qs, rs)
    assert direction.n_reference == 2 and direction.dim == 4
    assert direction.gamma(qs[0], rs[0]) > 0.8
    assert direction.gamma(rs[0], qs[0]) < -0.8
    again = gg.GroundingDirection.from_json(direction.to_json())
    assert close(again.cosine(direction), 1.0)

    index = gg.ReferenceIndex(["a", "b"], qs, rs)
    assert len(index) == 2
    assert index.nearest(qs[0], 1)[0][0] == "a"
    assert index.nearest(qs[0], 1, exclude="a")[0][0] == "b"
    assert close(index.global_direction().cosine(direction), 1.0)
    assert close(index.gamma_local(qs[0], rs[0], k=1), 1.0)

    # Metrics.
    assert gg.auroc([0.9, 0.8], [0.1, 0.2]) == 1.0
    assert gg.auroc([0.5], [0.5]) == 0.5
    assert gg.cohens_d([2.0, 3.0, 4.0], [0.0, 1.0, 2.0]) > 0
    rng = random.Random(0)
    pos = [rng.gauss(1.0, 1.0) for _ in range(60)]
    neg = [rng.gauss(0.0, 1.0) for _ in range(60)]
    point = gg.auroc(pos, neg)
    low, high, _ = gg.bootstrap_ci(pos, neg, resamples=500, seed=7)
    assert low <= point <= high
    assert gg.bootstrap_ci(pos, neg, resamples=500, seed=7)[:2] == (low, high)

    # Synthetic data.
    samples = gg.sample_vmf([0.0, 0.0, 1.0], 200.0, 100, seed=3)
    assert len(samples) == 100
    assert sum(s[2] for s in samples) / 100 > 0.95

    records, truth = gg.generate_scenario("type2", 32, 100, 100, kappa=5.0, seed=1)
    assert len(records) == 200
    assert truth["domains"][0]["grounding_direction"] is not None
    grounded = [x for x in records if x["label"] == "grounded"]
    halluc = [x for x in records if x["label"] == "hallucinated"]
    fit = gg.calibrate([x["q_emb"] for x in grounded], [x["r_emb"] for x in grounded])
    planted = truth["domains"][0]["grounding_direction"]
    assert sum(a * b for a, b in zip(fit.mu_hat, planted)) > 0.9

    def score(x):
        return fit.gamma(x["q_emb"], x["r_emb"])

    assert gg.auroc([score(x) for x in grounded], [score(x) for x in halluc]) > 0.9

    try:
        gg.normalize([0.0, 0.0, 0.0])
    except ValueError:
        pass
    else:
        raise AssertionError("zero vector should be rejected")

    print("geoground smoke test: ok")


if __name__ == "__main__":
    main()
