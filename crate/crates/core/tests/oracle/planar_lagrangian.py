"""Independent planar Lagrangian oracle for a free-floating base carrying a 2-link arm.

Derives the equations of motion symbolically from the kinetic energy of three
planar rigid bodies (base, link 1, link 2), then freezes reference values into
`../fixtures/planar_oracle.json`. Nothing here shares code with the Rust crate.

Run from this directory:  python3 planar_lagrangian.py
"""

import json
import os

import numpy as np
import sympy as sp
from scipy.integrate import solve_ivp

# ---------------------------------------------------------------- symbols ----
x, y, phi, th1, th2 = sp.symbols("x y phi th1 th2", real=True)
xd, yd, phid, th1d, th2d = sp.symbols("xd yd phid th1d th2d", real=True)
q = sp.Matrix([x, y, phi, th1, th2])
qd = sp.Matrix([xd, yd, phid, th1d, th2d])

m0, I0, s0x, s0y = sp.symbols("m0 I0 s0x s0y", positive=True)
m1, I1, a1, c1x, c1y = sp.symbols("m1 I1 a1 c1x c1y", real=True)
m2, I2, a2, c2x, c2y = sp.symbols("m2 I2 a2 c2x c2y", real=True)


def rot(angle):
    return sp.Matrix([[sp.cos(angle), -sp.sin(angle)], [sp.sin(angle), sp.cos(angle)]])


p0 = sp.Matrix([x, y])
pm = p0 + rot(phi) * sp.Matrix([s0x, s0y])
p1 = pm + rot(phi + th1) * sp.Matrix([c1x, c1y])
j2 = pm + rot(phi + th1) * sp.Matrix([a1, 0])
p2 = j2 + rot(phi + th1 + th2) * sp.Matrix([c2x, c2y])
ee = j2 + rot(phi + th1 + th2) * sp.Matrix([a2, 0])


def velocity(p):
    return p.jacobian(q) * qd


T = (
    sp.Rational(1, 2) * m0 * (velocity(p0).T * velocity(p0))[0]
    + sp.Rational(1, 2) * m1 * (velocity(p1).T * velocity(p1))[0]
    + sp.Rational(1, 2) * m2 * (velocity(p2).T * velocity(p2))[0]
    + sp.Rational(1, 2) * I0 * phid**2
    + sp.Rational(1, 2) * I1 * (phid + th1d) ** 2
    + sp.Rational(1, 2) * I2 * (phid + th1d + th2d) ** 2
)

# Lagrange: d/dt(dT/dqd) - dT/dq = Q, written as M(q) qdd + h(q, qd) = Q.
dT_dqd = sp.Matrix([sp.diff(T, v) for v in qd])
M = dT_dqd.jacobian(qd)
h = dT_dqd.jacobian(q) * qd - sp.Matrix([sp.diff(T, v) for v in q])
M = sp.simplify(M)
h = sp.simplify(h)

params = [m0, I0, s0x, s0y, m1, I1, a1, c1x, c1y, m2, I2, a2, c2x, c2y]
args = list(q) + list(qd) + params
M_fn = sp.lambdify(args, M, "numpy")
h_fn = sp.lambdify(args, h, "numpy")
com_expr = (m0 * p0 + m1 * p1 + m2 * p2) / (m0 + m1 + m2)
com_fn = sp.lambdify(args, com_expr, "numpy")
ee_fn = sp.lambdify(args, ee, "numpy")

# ------------------------------------------------------------ reference ------
REFERENCE = {
    "m0": 40.0, "I0": 6.0, "s0x": 0.5, "s0y": 0.1,
    "m1": 5.0, "I1": 0.45, "a1": 1.0, "c1x": 0.45, "c1y": 0.02,
    "m2": 4.0, "I2": 0.25, "a2": 0.8, "c2x": 0.35, "c2y": -0.01,
}


def pvec(p):
    return [p[str(s)] for s in params]


def accelerations(state, tau, p):
    qv, qdv = state[:5], state[5:]
    Mn = np.array(M_fn(*qv, *qdv, *pvec(p)), dtype=float)
    hn = np.array(h_fn(*qv, *qdv, *pvec(p)), dtype=float).reshape(5)
    Q = np.array([0.0, 0.0, 0.0, tau[0], tau[1]])
    return np.linalg.solve(Mn, Q - hn)


def fixed_base_mass_matrix(theta, p):
    qv = [0.0, 0.0, 0.0, theta[0], theta[1]]
    Mn = np.array(M_fn(*qv, *([0.0] * 5), *pvec(p)), dtype=float)
    return Mn[3:, 3:]


def quintic(s):
    return 10 * s**3 - 15 * s**4 + 6 * s**5, (30 * s**2 - 60 * s**3 + 30 * s**4)


def cycle_path(waypoints, seg_time):
    waypoints = [np.array(w, dtype=float) for w in waypoints]

    def at(t):
        k = min(int(t // seg_time), len(waypoints) - 2)
        tau = (t - k * seg_time) / seg_time
        tau = min(max(tau, 0.0), 1.0)
        s, sd = quintic(tau)
        d = waypoints[k + 1] - waypoints[k]
        return waypoints[k] + s * d, sd * d / seg_time

    return at, seg_time * (len(waypoints) - 1)


def base_motion_along(path, total, p):
    """Zero-momentum base response to a prescribed joint path."""

    def rhs(t, b):
        th, thd = path(t)
        qv = [b[0], b[1], b[2], th[0], th[1]]
        Mn = np.array(M_fn(*qv, *([0.0] * 5), *pvec(p)), dtype=float)
        return -np.linalg.solve(Mn[:3, :3], Mn[:3, 3:] @ thd)

    seg = total / 4.0
    b = np.zeros(3)
    t0 = 0.0
    # integrate piecewise so the solver never steps across a segment joint
    while t0 < total - 1e-12:
        t1 = min(t0 + seg, total)
        sol = solve_ivp(rhs, (t0, t1), b, method="DOP853", rtol=1e-13, atol=1e-15)
        b = sol.y[:, -1]
        t0 = t1
    return b


def com_offset_for(theta, p):
    qv = [0.0, 0.0, 0.0, theta[0], theta[1]]
    c = np.array(com_fn(*qv, *([0.0] * 5), *pvec(p)), dtype=float).reshape(2)
    return c


def main():
    rng = np.random.default_rng(20240917)
    p = REFERENCE
    samples = []
    for _ in range(60):
        state = np.concatenate([
            rng.uniform(-1.0, 1.0, 2),
            rng.uniform(-np.pi, np.pi, 1),
            rng.uniform(-np.pi, np.pi, 2),
            rng.uniform(-0.3, 0.3, 2),
            rng.uniform(-0.5, 0.5, 1),
            rng.uniform(-1.5, 1.5, 2),
        ])
        tau = rng.uniform(-5.0, 5.0, 2)
        acc = accelerations(state, tau, p)
        samples.append({"q": state[:5].tolist(), "qd": state[5:].tolist(),
                        "tau": tau.tolist(), "qdd": acc.tolist()})

    named = accelerations(np.array([0, 0, 0, 0.3, -0.5, 0, 0, 0, 0, 0], dtype=float),
                          [0.1, 0.0], p)

    mm = fixed_base_mass_matrix([0.0, 0.0], p)

    waypoints = [[0.2, 0.4], [1.0, 0.4], [1.0, 1.2], [0.2, 1.2], [0.2, 0.4]]
    seg_time = 2.0
    path, total = cycle_path(waypoints, seg_time)
    base_end = base_motion_along(path, total, p)

    back_and_forth = [[0.2, 0.4], [1.0, 1.2], [0.2, 0.4]]
    path_r, total_r = cycle_path(back_and_forth, seg_time)
    base_end_r = base_motion_along(path_r, total_r, p)

    # the base CoM displacement implied by a fixed system CoM
    com_start = com_offset_for(waypoints[0], p)

    # barycentric example: masses (100, 5, 5), unit links, CoM at link middle
    bary = dict(m0=100.0, I0=10.0, s0x=0.5, s0y=0.0, m1=5.0, I1=0.4, a1=1.0,
                c1x=0.5, c1y=0.0, m2=5.0, I2=0.4, a2=1.0, c2x=0.5, c2y=0.0)
    th = [np.deg2rad(30.0), np.deg2rad(45.0)]
    c = com_offset_for(th, bary)
    qv = [-c[0], -c[1], 0.0, th[0], th[1]]
    ee_bary = np.array(ee_fn(*qv, *([0.0] * 5), *pvec(bary)), dtype=float).reshape(2)

    out = {
        "parameters": REFERENCE,
        "samples": samples,
        "named_free_float": {"q": [0, 0, 0, 0.3, -0.5], "tau": [0.1, 0.0], "qdd": named.tolist()},
        "fixed_base_mass_matrix_at_zero": mm.tolist(),
        "nonholonomy": {
            "waypoints": waypoints,
            "segment_time": seg_time,
            "net_base_rotation": float(base_end[2]),
            "base_translation": base_end[:2].tolist(),
            "com_at_start_relative_to_base": com_start.tolist(),
            "reversed_waypoints": back_and_forth,
            "reversed_net_base_rotation": float(base_end_r[2]),
        },
        "barycentric_planar": {"parameters": bary, "theta": th, "ee_position": ee_bary.tolist()},
    }
    here = os.path.dirname(os.path.abspath(__file__))
    target = os.path.join(here, "..", "fixtures", "planar_oracle.json")
    with open(target, "w") as f:
        json.dump(out, f, indent=1)
    print("net base rotation", base_end[2], "reversed", base_end_r[2])
    print("named free-float qdd", named)
    print("fixed-base M", mm)
    print("ee barycentric example", ee_bary)


if __name__ == "__main__":
    main()
