"""Smoke test for the pyphotocorr extension.

Build and install the wheel first:

    cd crates/python && maturin build --release -o ../../target/wheels
    pip install ../../target/wheels/pyphotocorr-*.whl
    python python/smoke_test.py
"""

import math

import pyphotocorr as pc


def local_maxima(values):
    return [i for i in range(1, len(values) - 1) if values[i - 1] < values[i] >= values[i + 1]]


def main():
    kr = 0.05
    delta, gamma = pc.dipole_coefficients(kr)
    assert abs(gamma - math.sin(kr) / kr) < 1e-12
    assert abs(delta + math.cos(kr) / (2 * kr)) < 1e-12

    pair = pc.EmitterPair(kr12=kr, rabi=30.0)
    d12, d23, d13 = pair.triplet()
    assert abs(d12 + d23 - d13) < 1e-12
    assert len(pair.sidebands()) == 7
    print(pair, "triplet", (round(d12, 3), round(d23, 3), round(d13, 3)))

    omega = [-(d13 + 10) + i * 2 * (d13 + 10) / 400 for i in range(401)]
    values, elastic = pc.spectrum(pair, omega)
    peaks = [omega[i] for i in local_maxima(values)]
    assert len(peaks) == 7, peaks
    print("spectrum peaks", [round(p, 2) for p in peaks], "elastic weight", round(elastic, 4))

    single = pc.EmitterPair(rabi=30.0, atoms=1)
    assert abs(pc.g2_unfiltered(single, [0.0])[0]) < 1e-6

    g = pc.sensor_g2(pair, d12, -d12)
    assert g > 1.0
    r = pc.csi(pair, d13, 0.0)
    assert r["ratio"] <= 1.0
    b = pc.bell(pair, d13, -d13)
    assert b > 2.0
    print(f"g2(D12,-D12) = {g:.3f}, R_s(D13,0) = {r['ratio']:.3f}, B_s(D13,-D13) = {b:.3f}")

    curve = pc.sensor_g2_tau(pair, d13, -d23, [-1.0, 0.0, 1.0])
    assert len(curve) == 3 and all(v >= 0 for v in curve)

    table = pc.run("fig2c", ["tau.points=5"])
    assert table["columns"] == ["tau", "g2"] and len(table["rows"]) == 5
    assert set(pc.preset_names()) >= {"fig1b", "fig3c", "mollow-single-atom"}

    try:
        pc.EmitterPair(kr12=-1.0)
    except ValueError as e:
        print("rejected:", e)
    else:
        raise AssertionError("negative kr12 accepted")

    print("smoke test passed")


if __name__ == "__main__":
    main()
