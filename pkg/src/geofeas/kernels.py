"""Flat-array simulation kernel for SE(3) formations.

The generic object path in ``integrators`` is dimension-agnostic but
slow. For the center-distance scenario (block-diagonal inertias,
buoyancy-style potentials) this module runs the same per-step math on
plain float arrays. The single implementation below compiles under
numba when it is installed and also runs as-is under pure numpy; the
active path is chosen by ``IntegratorConfig.backend`` or, under
"auto", by the GEOFEAS_BACKEND environment variable (values: numba,
numpy, object). Everything is scalar loops on purpose so the two paths
execute identical arithmetic.
"""

from __future__ import annotations

import math
import os

import numpy as np

from . import constraints, groups
from .errors import SingularConstraintError

try:
    import numba
except ImportError:
    numba = None

_CONDITION_LIMIT = 1e12
_ENV_FLAG = "GEOFEAS_BACKEND"


def numba_available():
    return numba is not None


def resolve_backend(preference="auto"):
    """Map a backend preference to one of numba, numpy or object."""
    choice = preference
    if choice == "auto":
        env = os.environ.get(_ENV_FLAG, "").strip().lower()
        if env:
            if env not in ("numba", "numpy", "object"):
                raise ValueError(
                    f"{_ENV_FLAG} must be numba, numpy or object, got {env!r}")
            choice = env
        else:
            choice = "numba" if numba_available() else "numpy"
    if choice == "numba" and not numba_available():
        raise RuntimeError("numba backend requested but numba is not importable")
    if choice not in ("numba", "numpy", "object"):
        raise ValueError(f"unknown backend {choice!r}")
    return choice


def kernel_arrays(model, graph, state):
    """Flat parameter arrays for the SE(3) kernel, or None if not applicable.

    Applicability: SE(3) group, center-distance constraint kind (or no
    constraints), block-diagonal inertias and potentials that expose
    ``kernel_coefficients``.
    """
    if model.group_tag != groups.SE3:
        return None
    if graph is not None and graph.kind != constraints.SE3_CENTER_DISTANCE:
        return None
    r = model.r
    M = np.zeros((r, 3, 3))
    J = np.zeros((r, 3, 3))
    for i, I6 in enumerate(model.inertias):
        if np.max(np.abs(I6[:3, 3:])) != 0.0 or np.max(np.abs(I6[3:, :3])) != 0.0:
            return None
        M[i] = I6[:3, :3]
        J[i] = I6[3:, 3:]
    ucoef = np.zeros(r)
    wcoef = np.zeros(r)
    rbar = np.zeros((r, 3))
    potz = np.zeros(r)
    for i, pot in enumerate(model.potentials):
        getter = getattr(pot, "kernel_coefficients", None)
        if getter is None:
            return None
        u, w, rb, pz = getter()
        ucoef[i] = u
        wcoef[i] = w
        rbar[i] = np.asarray(rb, dtype=float)
        potz[i] = pz
    if graph is not None:
        ei = np.array([e.i for e in graph.edges], dtype=np.int64)
        ej = np.array([e.j for e in graph.edges], dtype=np.int64)
        targets = np.array([graph.target_distance(e) for e in graph.edges])
    else:
        ei = np.zeros(0, dtype=np.int64)
        ej = np.zeros(0, dtype=np.int64)
        targets = np.zeros(0)
    return {
        "M": M, "J": J,
        "Minv": np.array([np.linalg.inv(M[i]) for i in range(r)]),
        "Jinv": np.array([np.linalg.inv(J[i]) for i in range(r)]),
        "ucoef": ucoef, "wcoef": wcoef, "rbar": rbar, "potz": potz,
        "ei": ei, "ej": ej, "targets": targets,
    }


def _run_se3(R, b, nu, om, M, J, Minv, Jinv, ucoef, wcoef, rbar, potz,
             ei, ej, targets, enforce, refresh, h, steps, q, method, t0, ext,
             times, Rout, bout, nuout, omout, xidotout, lamout, phiout,
             dphiout, eout, momout, orthout):
    r = R.shape[0]
    m = ei.shape[0]

    vw = np.zeros((r, 3))       # world-frame translational velocity R nu
    Re3 = np.zeros((r, 3))      # R^T e3
    Mnu = np.zeros((r, 3))
    Jom = np.zeros((r, 3))
    gyr = np.zeros((r, 3))      # R (om x nu)
    fnu = np.zeros((r, 3))
    fom = np.zeros((r, 3))
    minv_f = np.zeros((r, 3))
    force = np.zeros((r, 3))
    nudot = np.zeros((r, 3))
    omdot = np.zeros((r, 3))
    rowi = np.zeros((m, 3))
    rowj = np.zeros((m, 3))
    zi = np.zeros((m, 3))
    zj = np.zeros((m, 3))
    phi = np.zeros(m)
    dphi = np.zeros(m)
    lam = np.zeros(m)
    lam_frozen = np.zeros(m)
    gram = np.zeros((m, m))
    cvec = np.zeros(m)

    status = 0
    fail_step = -1
    fail_cond = 0.0
    max_phi = 0.0
    max_rate = 0.0
    max_ortho = 0.0
    max_drift = 0.0
    rec = 0

    for step in range(steps + 1):
        for i in range(r):
            for a in range(3):
                Re3[i, a] = R[i, 2, a]
                s1 = 0.0
                s2 = 0.0
                s3 = 0.0
                for c in range(3):
                    s1 += M[i, a, c] * nu[i, c]
                    s2 += J[i, a, c] * om[i, c]
                    s3 += R[i, a, c] * nu[i, c]
                Mnu[i, a] = s1
                Jom[i, a] = s2
                vw[i, a] = s3
            cx = om[i, 1] * nu[i, 2] - om[i, 2] * nu[i, 1]
            cy = om[i, 2] * nu[i, 0] - om[i, 0] * nu[i, 2]
            cz = om[i, 0] * nu[i, 1] - om[i, 1] * nu[i, 0]
            for a in range(3):
                gyr[i, a] = R[i, a, 0] * cx + R[i, a, 1] * cy + R[i, a, 2] * cz

        for i in range(r):
            fnu[i, 0] = Mnu[i, 1] * om[i, 2] - Mnu[i, 2] * om[i, 1] + ucoef[i] * Re3[i, 0]
            fnu[i, 1] = Mnu[i, 2] * om[i, 0] - Mnu[i, 0] * om[i, 2] + ucoef[i] * Re3[i, 1]
            fnu[i, 2] = Mnu[i, 0] * om[i, 1] - Mnu[i, 1] * om[i, 0] + ucoef[i] * Re3[i, 2]
            wx = rbar[i, 1] * Re3[i, 2] - rbar[i, 2] * Re3[i, 1]
            wy = rbar[i, 2] * Re3[i, 0] - rbar[i, 0] * Re3[i, 2]
            wz = rbar[i, 0] * Re3[i, 1] - rbar[i, 1] * Re3[i, 0]
            fom[i, 0] = (Jom[i, 1] * om[i, 2] - Jom[i, 2] * om[i, 1]
                         + Mnu[i, 1] * nu[i, 2] - Mnu[i, 2] * nu[i, 1] - wcoef[i] * wx)
            fom[i, 1] = (Jom[i, 2] * om[i, 0] - Jom[i, 0] * om[i, 2]
                         + Mnu[i, 2] * nu[i, 0] - Mnu[i, 0] * nu[i, 2] - wcoef[i] * wy)
            fom[i, 2] = (Jom[i, 0] * om[i, 1] - Jom[i, 1] * om[i, 0]
                         + Mnu[i, 0] * nu[i, 1] - Mnu[i, 1] * nu[i, 0] - wcoef[i] * wz)
            for a in range(3):
                s1 = 0.0
                for c in range(3):
                    s1 += Minv[i, a, c] * fnu[i, c]
                minv_f[i, a] = s1

        for k in range(m):
            i = ei[k]
            j = ej[k]
            dbx = b[i, 0] - b[j, 0]
            dby = b[i, 1] - b[j, 1]
            dbz = b[i, 2] - b[j, 2]
            dvx = vw[i, 0] - vw[j, 0]
            dvy = vw[i, 1] - vw[j, 1]
            dvz = vw[i, 2] - vw[j, 2]
            phi[k] = dbx * dbx + dby * dby + dbz * dbz - targets[k] * targets[k]
            dphi[k] = 2.0 * (dbx * dvx + dby * dvy + dbz * dvz)
            for a in range(3):
                rowi[k, a] = 2.0 * (R[i, 0, a] * dbx + R[i, 1, a] * dby + R[i, 2, a] * dbz)
                rowj[k, a] = -2.0 * (R[j, 0, a] * dbx + R[j, 1, a] * dby + R[j, 2, a] * dbz)
            gk = (gyr[i, 0] - gyr[j, 0]) * dbx + (gyr[i, 1] - gyr[j, 1]) * dby + (gyr[i, 2] - gyr[j, 2]) * dbz
            adot = 2.0 * (dvx * dvx + dvy * dvy + dvz * dvz) + 2.0 * gk
            si = 0.0
            sj = 0.0
            for a in range(3):
                s1 = 0.0
                s2 = 0.0
                for c in range(3):
                    s1 += Minv[i, a, c] * rowi[k, c]
                    s2 += Minv[j, a, c] * rowj[k, c]
                zi[k, a] = s1
                zj[k, a] = s2
                si += rowi[k, a] * minv_f[i, a]
                sj += rowj[k, a] * minv_f[j, a]
            cvec[k] = -adot - si - sj

        if m > 0 and enforce:
            if refresh or step == 0:
                for k in range(m):
                    for l in range(m):
                        s1 = 0.0
                        if ei[k] == ei[l]:
                            s1 += rowi[k, 0] * zi[l, 0] + rowi[k, 1] * zi[l, 1] + rowi[k, 2] * zi[l, 2]
                        if ei[k] == ej[l]:
                            s1 += rowi[k, 0] * zj[l, 0] + rowi[k, 1] * zj[l, 1] + rowi[k, 2] * zj[l, 2]
                        if ej[k] == ei[l]:
                            s1 += rowj[k, 0] * zi[l, 0] + rowj[k, 1] * zi[l, 1] + rowj[k, 2] * zi[l, 2]
                        if ej[k] == ej[l]:
                            s1 += rowj[k, 0] * zj[l, 0] + rowj[k, 1] * zj[l, 1] + rowj[k, 2] * zj[l, 2]
                        gram[k, l] = s1
                for k in range(m):
                    for l in range(k):
                        avg = 0.5 * (gram[k, l] + gram[l, k])
                        gram[k, l] = avg
                        gram[l, k] = avg
                _, sv, _ = np.linalg.svd(gram)
                if sv[m - 1] <= 0.0 or sv[0] / sv[m - 1] > _CONDITION_LIMIT:
                    status = 3
                    fail_step = step
                    if sv[m - 1] > 0.0:
                        fail_cond = sv[0] / sv[m - 1]
                    else:
                        fail_cond = np.inf
                    break
                lam = np.linalg.solve(gram, cvec)
                if not refresh:
                    for k in range(m):
                        lam_frozen[k] = lam[k]
            else:
                for k in range(m):
                    lam[k] = lam_frozen[k]
        else:
            for k in range(m):
                lam[k] = 0.0

        for i in range(r):
            for a in range(3):
                force[i, a] = fnu[i, a] + ext[step, i, a]
        if enforce:
            for k in range(m):
                for a in range(3):
                    force[ei[k], a] += lam[k] * rowi[k, a]
                    force[ej[k], a] += lam[k] * rowj[k, a]
        for i in range(r):
            for a in range(3):
                s1 = 0.0
                s2 = 0.0
                for c in range(3):
                    s1 += Minv[i, a, c] * force[i, c]
                    s2 += Jinv[i, a, c] * (fom[i, c] + ext[step, i, 3 + c])
                nudot[i, a] = s1
                omdot[i, a] = s2

        for k in range(m):
            aphi = abs(phi[k])
            if aphi > max_phi:
                max_phi = aphi
            arate = abs(dphi[k])
            if arate > max_rate:
                max_rate = arate
            dist = math.sqrt(max(phi[k] + targets[k] * targets[k], 0.0))
            drift = abs(dist - targets[k])
            if drift > max_drift:
                max_drift = drift
        for i in range(r):
            s1 = 0.0
            for a in range(3):
                for c in range(3):
                    acc = R[i, 0, a] * R[i, 0, c] + R[i, 1, a] * R[i, 1, c] + R[i, 2, a] * R[i, 2, c]
                    if a == c:
                        acc -= 1.0
                    s1 += acc * acc
            err = math.sqrt(s1)
            if err > max_ortho:
                max_ortho = err
            if step % q == 0 or step == steps:
                orthout[rec, i] = err

        if step % q == 0 or step == steps:
            times[rec] = t0 + step * h
            en = 0.0
            for i in range(r):
                ke = 0.0
                for a in range(3):
                    ke += nu[i, a] * Mnu[i, a] + om[i, a] * Jom[i, a]
                pe = wcoef[i] * (rbar[i, 0] * Re3[i, 0] + rbar[i, 1] * Re3[i, 1]
                                + rbar[i, 2] * Re3[i, 2]) + potz[i] * b[i, 2]
                en += 0.5 * ke + pe
                for a in range(3):
                    bout[rec, i, a] = b[i, a]
                    nuout[rec, i, a] = nu[i, a]
                    omout[rec, i, a] = om[i, a]
                    xidotout[rec, i, a] = nudot[i, a]
                    xidotout[rec, i, 3 + a] = omdot[i, a]
                    sm = 0.0
                    st = 0.0
                    for c in range(3):
                        Rout[rec, i, a, c] = R[i, a, c]
                        sm += R[i, a, c] * Mnu[i, c]
                        st += R[i, a, c] * Jom[i, c]
                    momout[rec, i, a] = sm
                    momout[rec, i, 3 + a] = st
                momout[rec, i, 3] += b[i, 1] * momout[rec, i, 2] - b[i, 2] * momout[rec, i, 1]
                momout[rec, i, 4] += b[i, 2] * momout[rec, i, 0] - b[i, 0] * momout[rec, i, 2]
                momout[rec, i, 5] += b[i, 0] * momout[rec, i, 1] - b[i, 1] * momout[rec, i, 0]
            eout[rec] = en
            for k in range(m):
                lamout[rec, k] = lam[k]
                phiout[rec, k] = phi[k]
                dphiout[rec, k] = dphi[k]
            rec += 1

        if step == steps:
            break

        if method == 0:
            for i in range(r):
                w1 = om[i, 0]
                w2 = om[i, 1]
                w3 = om[i, 2]
                raw = np.zeros((3, 3))
                for a in range(3):
                    raw[a, 0] = R[i, a, 0] + h * (R[i, a, 1] * w3 - R[i, a, 2] * w2)
                    raw[a, 1] = R[i, a, 1] + h * (R[i, a, 2] * w1 - R[i, a, 0] * w3)
                    raw[a, 2] = R[i, a, 2] + h * (R[i, a, 0] * w2 - R[i, a, 1] * w1)
                U, _, Vt = np.linalg.svd(raw)
                P = U @ Vt
                det = (P[0, 0] * (P[1, 1] * P[2, 2] - P[1, 2] * P[2, 1])
                       - P[0, 1] * (P[1, 0] * P[2, 2] - P[1, 2] * P[2, 0])
                       + P[0, 2] * (P[1, 0] * P[2, 1] - P[1, 1] * P[2, 0]))
                if det < 0.0:
                    for a in range(3):
                        U[a, 2] = -U[a, 2]
                    P = U @ Vt
                for a in range(3):
                    for c in range(3):
                        R[i, a, c] = P[a, c]
                    b[i, a] += h * vw[i, a]
        else:
            for i in range(r):
                w1 = h * om[i, 0]
                w2 = h * om[i, 1]
                w3 = h * om[i, 2]
                theta = math.sqrt(w1 * w1 + w2 * w2 + w3 * w3)
                if theta < 1e-8:
                    t2 = theta * theta
                    ca = 1.0 - t2 / 6.0
                    cb = 0.5 - t2 / 24.0
                    cc = 1.0 / 6.0 - t2 / 120.0
                else:
                    st = math.sin(theta)
                    ct = math.cos(theta)
                    ca = st / theta
                    cb = (1.0 - ct) / (theta * theta)
                    cc = (theta - st) / (theta * theta * theta)
                W = np.zeros((3, 3))
                W[0, 1] = -w3
                W[0, 2] = w2
                W[1, 0] = w3
                W[1, 2] = -w1
                W[2, 0] = -w2
                W[2, 1] = w1
                W2 = W @ W
                E = np.eye(3) + ca * W + cb * W2
                V = np.eye(3) + cb * W + cc * W2
                p1 = h * nu[i, 0]
                p2 = h * nu[i, 1]
                p3 = h * nu[i, 2]
                px = V[0, 0] * p1 + V[0, 1] * p2 + V[0, 2] * p3
                py = V[1, 0] * p1 + V[1, 1] * p2 + V[1, 2] * p3
                pz = V[2, 0] * p1 + V[2, 1] * p2 + V[2, 2] * p3
                newR = R[i] @ E
                for a in range(3):
                    b[i, a] += R[i, a, 0] * px + R[i, a, 1] * py + R[i, a, 2] * pz
                for a in range(3):
                    for c in range(3):
                        R[i, a, c] = newR[a, c]
        for i in range(r):
            for a in range(3):
                nu[i, a] += h * nudot[i, a]
                om[i, a] += h * omdot[i, a]

    return status, fail_step, fail_cond, max_phi, max_rate, max_ortho, max_drift


_RUN_NUMBA = numba.njit(cache=True)(_run_se3) if numba is not None else None


def run_kernel(model, graph, state, config, arrays, external_forces, backend):
    """Drive ``_run_se3`` and package the outputs as a Trajectory."""
    from .integrators import Trajectory, _record_count

    r = model.r
    m = arrays["ei"].shape[0]
    steps, q, h = config.steps, config.record_every, config.h
    K = _record_count(steps, q)

    R = np.array([gi.rotation for gi in state.g])
    b = np.array([gi.translation for gi in state.g])
    coords = np.asarray(state.xi.coords)
    nu = np.array(coords[:, :3])
    om = np.array(coords[:, 3:])
    if external_forces is None:
        ext = np.zeros((steps + 1, r, 6))
    else:
        ext = np.ascontiguousarray(external_forces, dtype=float)

    times = np.zeros(K)
    Rout = np.zeros((K, r, 3, 3))
    bout = np.zeros((K, r, 3))
    nuout = np.zeros((K, r, 3))
    omout = np.zeros((K, r, 3))
    xidotout = np.zeros((K, r, 6))
    lamout = np.zeros((K, m))
    phiout = np.zeros((K, m))
    dphiout = np.zeros((K, m))
    eout = np.zeros(K)
    momout = np.zeros((K, r, 6))
    orthout = np.zeros((K, r))

    fn = _RUN_NUMBA if backend == "numba" else _run_se3
    out = fn(R, b, nu, om,
             arrays["M"], arrays["J"], arrays["Minv"], arrays["Jinv"],
             arrays["ucoef"], arrays["wcoef"], arrays["rbar"], arrays["potz"],
             arrays["ei"], arrays["ej"], arrays["targets"],
             config.enforce_constraints, config.refresh_multipliers,
             h, steps, q, 0 if config.method == "euler" else 1, state.t, ext,
             times, Rout, bout, nuout, omout, xidotout, lamout, phiout,
             dphiout, eout, momout, orthout)
    status, fail_step, fail_cond, max_phi, max_rate, max_ortho, max_drift = out
    if status == 3:
        raise SingularConstraintError(
            f"multiplier system became singular at step {fail_step} "
            f"(condition {fail_cond:.3e})",
            condition_number=float(fail_cond), step_index=int(fail_step))

    mats = np.zeros((K, r, 4, 4))
    mats[:, :, :3, :3] = Rout
    mats[:, :, :3, 3] = bout
    mats[:, :, 3, 3] = 1.0
    xis = np.concatenate([nuout, omout], axis=2)
    return Trajectory(
        group_tag=groups.SE3, times=times, matrices=mats, xi=xis,
        xidot=xidotout, lam=lamout, phi=phiout, dphi=dphiout, energy=eout,
        momentum=momout, ortho=orthout, method=config.method, h=h,
        steps=steps, record_every=q, max_abs_phi=float(max_phi),
        max_abs_rate=float(max_rate), max_ortho=float(max_ortho),
        max_distance_drift=float(max_drift), backend_used=backend,
    )
