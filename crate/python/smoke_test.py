#!/usr/bin/env python3
"""Smoke test for the precondbench_py extension module.

Build the extension first:

    cargo build -p precondbench-py --release

then run:

    python3 python/smoke_test.py
"""
import math
import shutil
import sys
import tempfile
from pathlib import Path


def load_module():
    root = Path(__file__).resolve().parent.parent
    candidates = [
        root / "target" / "release" / "libprecondbench_py.so",
        root / "target" / "debug" / "libprecondbench_py.so",
        root / "target" / "release" / "libprecondbench_py.dylib",
        root / "target" / "debug" / "libprecondbench_py.dylib",
    ]
    built = next((p for p in candidates if p.exists()), None)
    if built is None:
        sys.exit("extension not built; run: cargo build -p precondbench-py --release")
    stage = Path(tempfile.mkdtemp(prefix="precondbench-py-"))
    # CPython loads .so-suffixed extension modules on linux and mac alike
    shutil.copy2(built, stage / "precondbench_py.so")
    sys.path.insert(0, str(stage))
    import precondbench_py

    return precondbench_py


def main():
    pb = load_module()

    a = pb.SparseMatrix.poisson2d(16)
    assert a.dim == 256 and a.symmetric
    assert a.get(0, 0) == 4.0

    scaled, scale = a.scale_and_symmetrize()
    assert all(abs(s - 2.0) < 1e-15 for s in scale)
    assert scaled.get(0, 0) == 1.0

    perm = scaled.rcm_order()
    reordered = scaled.permute(perm)
    assert reordered.bandwidth() <= scaled.bandwidth()

    x_star, b, support = pb.generate_problem(reordered, 123456789)
    assert support == round(math.log2(256)) + 1
    assert sum(1 for v in x_star if v != 0.0) == support

    control = pb.solve(reordered, b, "control")
    assert control.status == "converged", control
    assert control.rel_residual <= 1e-10

    ic = pb.solve(reordered, b, "ic:1e-6")
    assert ic.status == "converged"
    assert ic.work < control.work, (ic.work, control.work)
    assert ic.iterations < control.iterations

    sgs = pb.solve(reordered, b, "sgs:1")
    assert sgs.status == "converged"
    assert sgs.work <= control.work

    # work formula consistency
    expected = pb.total_work(reordered.dim, reordered.nnz, ic.apply_cost, ic.iterations)
    assert ic.work == expected

    # solution accuracy against the seeded exact solution
    err = max(abs(u - v) for u, v in zip(ic.solution, x_star))
    assert err < 1e-7, err

    flat = pb.auc([2.0 ** (-2 + i) for i in range(10)], [1.0] * 10)
    assert abs(flat - 1.0) < 1e-12

    # round-trip through Matrix Market
    with tempfile.TemporaryDirectory() as tmp:
        path = str(Path(tmp) / "m.mtx")
        a.write(path)
        back = pb.SparseMatrix.read(path)
        assert back.dim == a.dim and back.nnz == a.nnz

    print("precondbench_py smoke test: OK")


if __name__ == "__main__":
    main()
