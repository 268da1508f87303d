"""Smoke test for the twomode_py extension module.

Build and install first, e.g. ``maturin develop -m crates/python/Cargo.toml``.
"""

import math

import twomode_py as tm


def main():
    assert abs(tm.bessel_j0(0.0) - 1.0) < 1e-15

    p = tm.ModelParams.with_drive_ratio(0.0, 0.2, 1.0, 1.42, 20.0)
    gamma_eff, c_z, c_y = tm.derive_effective(p)
    assert abs(c_z - 0.4) < 5e-3 and abs(c_y - 0.6) < 5e-3
    assert abs(c_z + c_y - 1.0) < 1e-12

    fps = tm.find_fixed_points(p)
    assert len(fps) == 6, fps
    assert sum(f.stability == "saddle" for f in fps) == 2

    linear = tm.ModelParams(0.3, 0.2, 0.0)
    levels = tm.quantum_spectrum(linear, 4)
    gap = math.hypot(0.3, 0.2)
    assert all(abs(b - a - gap) < 1e-10 for a, b in zip(levels, levels[1:]))

    traj = tm.evolve(tm.ModelParams(0.0, 0.2, 0.0), -1.0, 0.0, math.pi / 0.2, frame="lab")
    assert traj[-1][1] < 1e-6  # complete transfer after half a Rabi period

    try:
        tm.ModelParams(0.0, -1.0, 1.0)
    except ValueError:
        pass
    else:
        raise AssertionError("negative delta0 accepted")

    print("twomode_py smoke test ok:", p)


if __name__ == "__main__":
    main()
