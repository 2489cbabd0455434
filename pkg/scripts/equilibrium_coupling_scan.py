"""Equilibrium position distributions across coupling regimes.

Reproduces the weak / intermediate / strong anisotropic-coupling
comparison (x-coupling twice the y-coupling) at high and low temperature
and writes one PDF table per case.  Runtime is dominated by the strong
low-temperature cases; expect tens of minutes at full resolution, or
pass --quick for a coarse desk-scale pass.
"""

import argparse
import sys

from ringheom import parse_config
from ringheom.runner import run_equilibrium

TEMPLATE = """\
[run]
experiment = equilibrium
output_dir = {outdir}

[bath]
eta_x = {eta_x}
eta_y = {eta_y}
k_x = {k}
k_y = {k}
beta = {beta}

[ring]
flux = {flux}

[grid]
momentum_cutoff = {np_cut}
theta_points = {m}

[hierarchy]
nmax = {nmax}

[stepping]
tol = {tol}

[equilibrium]
window = 2.0
eps_ss = {eps_ss}
max_time = 400
"""

COUPLINGS = {
    "weak": (0.02, 0.01),
    "intermediate": (0.2, 0.1),
    "strong": (1.0, 0.5),
}

# depth per regime; the strong case needs the deepest hierarchy
NMAX = {"weak": 4, "intermediate": 6, "strong": 7}


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--quick", action="store_true", help="coarse grids, shallow hierarchy")
    parser.add_argument("--outdir", default="out/equilibrium_scan")
    args = parser.parse_args()

    cases = []
    for beta, k, fluxes in ((1.0, 2, (0.0,)), (2.5, 4, (0.0, 0.5))):
        for regime, (ex, ey) in COUPLINGS.items():
            for flux in fluxes:
                cases.append((beta, k, regime, ex, ey, flux))

    for beta, k, regime, ex, ey, flux in cases:
        nmax = NMAX[regime]
        np_cut, m, tol, eps = 32, 32, 1e-10, 1e-7
        if args.quick:
            nmax = min(nmax, 4)
            np_cut, m, tol, eps = 16, 16, 1e-8, 1e-5
        outdir = f"{args.outdir}/beta{beta}_{regime}_flux{flux}"
        cfg = parse_config(
            TEMPLATE.format(
                outdir=outdir, eta_x=ex, eta_y=ey, k=k, beta=beta, flux=flux,
                np_cut=np_cut, m=m, nmax=nmax, tol=tol, eps_ss=eps,
            )
        )
        print(f"[beta={beta} {regime} flux={flux}] nmax={nmax} -> {outdir}")
        paths = run_equilibrium(cfg)
        print(f"  wrote {paths['pdf']}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
