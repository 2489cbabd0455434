import numpy as np, time
from ringheom import *
from ringheom.generator import build_tables, Generator
from ringheom.hierarchy import enumerate_indices
from ringheom.observables import pdf
from ringheom.propagator import propagate

def relax_amp(eta_x, eta_y, beta, K, nmax, Np, fluxbar, t_relax, M=16, tol=1e-8):
    grid = PhaseSpaceGrid(Np=Np, M=M)
    ring = RingSpec(fluxbar=fluxbar)
    bath = BathSpec(eta_x, eta_y, 1.0, 1.0, K, K, beta)
    idx = enumerate_indices(K, K, nmax)
    gen = Generator(idx, build_tables(ring, bath, grid))
    w = np.where(grid.n % 2 == 0, np.exp(-beta*(grid.p - fluxbar)**2/(2*0.5)), 0.0)
    w /= np.pi*w.sum()
    ados = grid.zeros(len(idx)); ados[0] = w[:, None]
    state = HeomState(0.0, 1e-4, ados)
    t0 = time.time()
    amps = []
    for tt in np.arange(t_relax/4, t_relax+0.1, t_relax/4):
        propagate(state, tt, StepControl(tol=tol), gen)
        P = pdf(state, grid)
        amps.append(P.max()-P.min())
    P = pdf(state, grid)
    return amps, np.argmax(P), time.time()-t0, len(idx), grid

# criterion 5: beta=1, K=2, eta_x=2*eta_y, ordering strong>inter>weak
print("=== C5: beta=1 K=2 ===", flush=True)
for name, ex, ey, nmax, t_rel in (("strong", 1.0, 0.5, 5, 25), ("inter", 0.2, 0.1, 5, 50), ("weak", 0.02, 0.01, 4, 60)):
    amps, am, wall, ni, grid = relax_amp(ex, ey, 1.0, 2, nmax, 14, 0.0, t_rel)
    print("%s: amps(t/4..t)=%s argmax=%d (M=%d) wall=%.0fs NI=%d" % (
        name, ["%.2e" % a for a in amps], am, grid.M, wall, ni), flush=True)

# criterion 6: beta=2.5, K=3, amp(flux=0.5) > amp(0)
print("=== C6: beta=2.5 K=3 ===", flush=True)
for name, ex, ey, nmax, t_rel in (("weak", 0.02, 0.01, 3, 60), ("inter", 0.2, 0.1, 4, 50), ("strong", 1.0, 0.5, 5, 30)):
    for flux in (0.0, 0.5):
        amps, am, wall, ni, grid = relax_amp(ex, ey, 2.5, 3, nmax, 12, flux, t_rel)
        print("%s flux=%.1f: amps=%s argmax=%d wall=%.0fs NI=%d" % (
            name, flux, ["%.3e" % a for a in amps], am, wall, ni), flush=True)
