#!/usr/bin/env python3
"""Wall-time comparison of the simulation backends.

Runs the engaged three-vehicle scenario on the numba kernel, the pure
numpy kernel and the generic object path, and reports timings plus the
largest state deviation between the paths. Usage:

    python benchmarks/compare_backends.py [--steps N] [--repeat K]
"""

import argparse
import time

import numpy as np

from geofeas import integrators, kernels
from geofeas.auv import three_vehicle_scenario
from geofeas.groups import GroupElement, ProductAlgebraElement, ProductElement
from geofeas.integrators import IntegratorConfig, SystemState


def engaged_state(graph, state):
    pos = np.array([g.translation for g in state.g])
    centroid = pos.mean(axis=0)
    coords = np.array(state.xi.coords)
    for i in range(3):
        coords[i, :3] += np.cross([0.0, 0.0, 0.08], pos[i] - centroid)
    return SystemState(g=state.g, xi=ProductAlgebraElement(state.g.group_tag, coords),
                       t=state.t)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--steps", type=int, default=2000)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()

    params, model, graph, state = three_vehicle_scenario()
    state = engaged_state(graph, state)

    backends = ["numpy", "object"]
    if kernels.numba_available():
        backends.insert(0, "numba")
    else:
        print("numba not importable; comparing numpy and object paths only")

    results = {}
    for backend in backends:
        cfg = IntegratorConfig(h=0.005, steps=args.steps, backend=backend)
        integrators.run_simulation(model, graph, state, cfg)  # warm-up / compile
        best = float("inf")
        for _ in range(args.repeat):
            t0 = time.perf_counter()
            traj = integrators.run_simulation(model, graph, state, cfg)
            best = min(best, time.perf_counter() - t0)
        results[backend] = (best, traj)
        rate = args.steps / best
        print(f"{backend:>7}: {best * 1e3:9.2f} ms   {rate:11.0f} steps/s   "
              f"drift {traj.max_distance_drift:.3e} m")

    ref = results[backends[-1]][1]
    for backend in backends[:-1]:
        traj = results[backend][1]
        dev = max(
            float(np.max(np.abs(traj.matrices - ref.matrices))),
            float(np.max(np.abs(traj.xi - ref.xi))),
            float(np.max(np.abs(traj.lam - ref.lam))),
        )
        print(f"max state deviation {backend} vs {backends[-1]}: {dev:.3e}")


if __name__ == "__main__":
    main()
