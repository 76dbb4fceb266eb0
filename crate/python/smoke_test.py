"""Smoke test for the tpbo extension module.

Build first:  cargo build --release -p tpbo-python --features extension-module
"""

import math
import os
import shutil
import sys
import tempfile

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


def import_tpbo():
    try:
        import tpbo
        return tpbo
    except ImportError:
        pass
    for profile in ("release", "debug"):
        lib = os.path.join(ROOT, "target", profile, "libtpbo.so")
        if os.path.exists(lib):
            d = tempfile.mkdtemp()
            shutil.copy(lib, os.path.join(d, "tpbo.so"))
            sys.path.insert(0, d)
            import tpbo
            return tpbo
    sys.exit("tpbo extension not found; build it with --features extension-module")


def main():
    tpbo = import_tpbo()

    xor_x = [[-1.0, -1.0], [1.0, -1.0], [-1.0, 1.0], [1.0, 1.0]]
    xor_y = [-1.0, 1.0, 1.0, -1.0]
    quad = tpbo.FreeKernel("polynomial", degree=2, offset=1.0)
    model = tpbo.pretrain(xor_x, xor_y, "classification", quad, lambda_grid=[1.0])
    assert all(abs(abs(a) - 0.125) < 1e-9 for a in model.alpha), model.alpha
    k = model.tuned_kernel()
    assert abs(k([0.5, -0.4], [0.3, 0.8]) - 0.5 * 0.5 * -0.4 * 0.3 * 0.8) < 1e-9

    try:
        tpbo.pretrain([[0.0], [0.5]], [0.3, 0.3], "regression", tpbo.FreeKernel("se"))
        raise AssertionError("constant targets should fail")
    except tpbo.VanishingKernelError:
        pass

    gp = tpbo.GpPosterior(tpbo.FreeKernel("se", nu=2.0), noise_var=0.0)
    gp.add_observation([0.1, 0.2], 0.7)
    mean, var = gp.posterior([0.1, 0.2])
    assert abs(mean - 0.7) < 1e-6 and var < 1e-6

    aux_x = [[math.cos(i), math.sin(2 * i)] for i in range(30)]
    aux_y = [tpbo.test_function("himmelblau", x) for x in aux_x]
    se_model = tpbo.pretrain(aux_x, aux_y, "regression", tpbo.FreeKernel("se"))
    session = tpbo.BoSession(se_model.tuned_kernel(), 2, acquisition="ei", seed=3)
    for _ in range(5):
        x = session.ask()
        assert session.ask() == x
        session.tell(x, tpbo.test_function("himmelblau", x))
    assert session.iteration == 5
    print("python smoke test passed")


if __name__ == "__main__":
    main()
