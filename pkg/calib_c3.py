import numpy as np, time
from ringheom import *
from ringheom.generator import build_tables, Generator
from ringheom.hierarchy import enumerate_indices
from ringheom.observables import response_function, spectrum
from ringheom.propagator import relax_to_equilibrium

grid = PhaseSpaceGrid(Np=10, M=16)
bath = BathSpec(0.02, 0.01, 1.0, 1.0, 2, 2, 1.0)
idx = enumerate_indices(2, 2, 4)
ctrl = StepControl(tol=1e-8)

for fluxbar in (0.0, 0.1, 0.3, 0.5):
    t0 = time.time()
    ring = RingSpec(fluxbar=fluxbar)
    gen = Generator(idx, build_tables(ring, bath, grid))
    w = np.where(grid.n % 2 == 0, np.exp(-(grid.p - fluxbar)**2), 0.0)
    w /= np.pi * w.sum()
    ados = grid.zeros(len(idx)); ados[0] = w[:, None]
    state = HeomState(0.0, 1e-4, ados)
    try:
        relax_to_equilibrium(state, ctrl, gen, grid, window=5.0, eps_ss=2e-5, max_time=60)
    except NoConvergence as e:
        print("flux", fluxbar, "relax hit max_time:", e)
    t_max = 400.0 if fluxbar == 0.5 else 200.0
    damping = 0.005 if fluxbar == 0.5 else 0.01
    series = response_function(state, grid, ctrl, gen, t_max=t_max, dt_sample=0.2)
    om = 0.02 * np.arange(0, 151)
    spec = spectrum(series, om, damping=damping)
    s = spec.sigma
    loc = [k for k in range(1, len(om) - 1) if s[k] > s[k - 1] and s[k] > s[k + 1] and s[k] > 0.02 * s.max()]
    targets = sorted({1 - 2 * fluxbar, 1 + 2 * fluxbar})
    print("flux=%.1f wall=%.0fs R0=%.4f |Rend|=%.2e" % (fluxbar, time.time() - t0, series.values[0], abs(series.values[-1])))
    print("  targets:", targets, " maxima:", [(round(om[k], 2), round(s[k], 3)) for k in loc[:6]])
    for tgt in targets:
        if loc:
            best = min((abs(om[k] - tgt), om[k]) for k in loc)
            print("  target %.1f -> nearest max at %.2f (offset %.3f)" % (tgt, best[1], best[0]))
