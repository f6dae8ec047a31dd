"""Smoke test for the Python bindings.

Builds the extension with cargo, copies it next to a temporary import path
and exercises the main entry points.

    python3 python/smoke_test.py
"""

import importlib
import json
import math
import shutil
import subprocess
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent


def load_module():
    subprocess.run(
        ["cargo", "build", "-p", "spectral-bounds-py"], cwd=ROOT, check=True
    )
    built = ROOT / "target" / "debug" / "libspectral_bounds_py.so"
    tmp = Path(tempfile.mkdtemp())
    shutil.copy(built, tmp / "spectral_bounds.so")
    sys.path.insert(0, str(tmp))
    return importlib.import_module("spectral_bounds")


def close(a, b, tol=1e-12):
    return abs(a - b) <= tol * max(1.0, abs(b))


def main():
    sb = load_module()

    square = sb.Domain.box([1.0, 1.0])
    assert square.dim == 2 and close(square.volume, 1.0)
    assert close(square.moment_of_inertia, 1.0 / 6.0)

    spec = sb.Spectrum.analytic(square, 10)
    assert len(spec) == 10
    assert close(spec.eigenvalues[0], 2 * math.pi**2)
    assert spec.provenance == "analytic-box"

    ev = sb.evaluate(spec, "liyau-sum", 5)
    assert ev.verified and ev.sharpness > 1
    ev = sb.evaluate(spec, "thm1", 10, k=5)
    assert ev.verified and ev.k == 5
    try:
        sb.evaluate(spec, "melas", 3)
    except ValueError:
        pass
    else:
        raise AssertionError("melas without a constant must fail")

    assert not sb.thm2_admissible(1000, 618, 2)
    assert sb.thm2_admissible(1000, 619, 2)
    assert close(sb.lemma1_factor(1.0, 2), 2.0)
    assert abs(sb.bessel_zero(0.0, 1) - 2.404825557695773) < 1e-9

    disk = sb.Domain.ball_with_volume(2, 1.0)
    fk = sb.faber_krahn_bound(2, 1.0)
    assert close(sb.Spectrum.analytic(disk, 1).eigenvalues[0], fk, 1e-6)

    mask = sb.Domain.mask("MASK2D 3 3 0.25\n1 1 1\n1 1 1\n1 1 1\n")
    fd = sb.Spectrum.fdm(mask, 2)
    assert fd.provenance == "fdm-discrete" and fd.discretization_tolerance > 0

    diag = sb.eta(square, 3)
    assert 0.0 <= diag.eta <= 1.0 and diag.lemma1_verified
    assert diag.max_g <= 1.0 + 1e-6

    report = json.loads(sb.run_cases())
    assert report["summary"]["total"] == report["summary"]["verified"]

    print("python smoke test passed")


if __name__ == "__main__":
    main()
