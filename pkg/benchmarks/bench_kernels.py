"""Compare the numba and pure-numpy backends of the double-precision kernels.

The backend is fixed at import time by ``FROBSERIES_NUMBA``, so each backend
runs in its own subprocess.  Usage::

    python benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import json
import os
import subprocess
import sys
import time

WORKER = r"""
import json, sys, time
import numpy as np
from frobseries import _kernels
from frobseries.frobenius import _dry_run, solve_series
from frobseries.ode import anharmonic_canonical, from_canonical
from frobseries.wkb import _factor, _geometry, q_squared_coeffs, s_profile

repeat = int(sys.argv[1])


def best(fn):
    fn()  # warm-up, includes JIT compilation
    t = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        t.append(time.perf_counter() - t0)
    return min(t), out


prob = from_canonical(anharmonic_canonical(0))
sol = solve_series(prob, "nu1")
t_dry, dry = best(lambda: _dry_run(sol, 100.0, 2000, 0.0, 3, 10**7))

cp = anharmonic_canonical(2)
fac = _factor(q_squared_coeffs(cp))
z = 50 * np.exp(1j * np.linspace(0.01, 6.2, 512))
rays = _geometry(fac, z, True, 1.0)


def batch():
    if _kernels.USE_NUMBA:
        return _kernels.integrate_batch_loop(1, rays.roots, rays.dirs, rays.lead_root, 0.0, rays.scale, 0.25 + 0j,
                                             rays.num, np.zeros(z.size), 1e-11, 1e-14)
    return _kernels.integrate_rays_numpy(1, rays.roots, rays.dirs, rays.lead_root, 0.0, rays.scale, 0.25 + 0j,
                                         rays.num, 1e-11, 1e-14)


t_batch, ints = best(batch)
u = np.linspace(1, 5, 21)
t_prof, prof = best(lambda: s_profile(anharmonic_canonical(4, -1), u))
print(json.dumps({
    "backend": _kernels.backend(),
    "dry_run": t_dry, "ray_batch": t_batch, "profile": t_prof,
    "dry_M": int(dry[1]), "dry_peak": float(dry[0]),
    "ints": [[v.real, v.imag] for v in np.asarray(ints)], "S": prof.S.tolist(),
}))
"""


def run(flag: str, repeat: int) -> dict:
    env = dict(os.environ, FROBSERIES_NUMBA=flag)
    out = subprocess.run([sys.executable, "-c", WORKER, str(repeat)], env=env, capture_output=True, text=True)
    if out.returncode:
        sys.exit(f"backend FROBSERIES_NUMBA={flag} failed:\n{out.stderr}")
    return json.loads(out.stdout.strip().splitlines()[-1])


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=2)
    args = ap.parse_args()
    t0 = time.perf_counter()
    nb, py = run("1", args.repeat), run("0", args.repeat)
    print(f"{'workload':<28}{'numba':>12}{'numpy':>12}{'speedup':>10}")
    for key, label in (("dry_run", "dry run (x=100, P=2000)"), ("ray_batch", "ray quadrature (512 rays)"),
                       ("profile", "Langer s_profile (21 u)")):
        print(f"{label:<28}{nb[key]:>11.4f}s{py[key]:>11.4f}s{py[key] / nb[key]:>9.1f}x")
    import numpy as np

    ints_nb = np.array(nb["ints"]) @ [1, 1j]
    ints_py = np.array(py["ints"]) @ [1, 1j]
    agree = (nb["dry_M"] == py["dry_M"] and abs(nb["dry_peak"] - py["dry_peak"]) < 1e-9
             and np.allclose(ints_nb, ints_py, rtol=1e-9)
             and np.allclose(nb["S"], py["S"], rtol=1e-9))
    print(f"backends agree: {agree} (dry-run M {nb['dry_M']} / {py['dry_M']}); total {time.perf_counter() - t0:.1f}s")
    sys.exit(0 if agree else 1)


if __name__ == "__main__":
    main()
