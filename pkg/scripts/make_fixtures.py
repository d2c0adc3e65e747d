"""Regenerate the synthetic calibration fixtures under fixtures/.

The tag-stream fixture and its golden report come from the CLI:

    twinbeam simulate --config fixtures/golden.cfg --out fixtures/golden.ttag
    twinbeam analyze fixtures/golden.ttag --config fixtures/golden.cfg --out fixtures/golden_report.json
"""

from pathlib import Path

import numpy as np

from twinbeam.cavity import synthetic_scan, write_scan

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"

# Loaded Q and coupling Q of the synthetic resonance, and its center (1553 nm).
Q_LOADED, Q_COUPLING, CENTER_HZ = 1.15e5, 1.6e5, 193.1e12
SCAN_NOISE = 5e-4

BRIGHTNESS_HZ_PER_UW = 27e6
PUMP_UW = [0.22, 0.4, 0.6, 0.8, 1.12]


def main():
    rng = np.random.default_rng(1553)
    scan = synthetic_scan(Q_LOADED, Q_COUPLING, CENTER_HZ, n=401, span_linewidths=10, noise=SCAN_NOISE, rng=rng)
    write_scan(FIXTURES / "resonance_scan.txt", scan, CENTER_HZ)

    lines = ["# pump_w rate_hz"]
    lines += [f"{p * 1e-6:.6e} {BRIGHTNESS_HZ_PER_UW * p:.6e}" for p in PUMP_UW]
    (FIXTURES / "fig5a_points.txt").write_text("\n".join(lines) + "\n")


if __name__ == "__main__":
    main()
