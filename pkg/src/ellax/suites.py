"""Named verification suites.

Every suite takes a validated configuration dictionary and an RNG seed and
returns a :class:`SuiteResult`: a list of check records (each with the
measured value, its tolerance and a pass flag) plus optional tables.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import elliptic as ell
from .cmsystems import CouplingData, PhaseState, hamiltonian_closed_form, hamiltonian_via_residue, \
    lax_field, random_state
from .dynamics import ClosedFormHamiltonian, ResidueHamiltonian, cm_lax, holomorphy_scan, integrate, \
    spectral_invariants
from .errors import EllaxError
from .hierarchy import HierarchyIndex, construct_ma, involution_check, verify_lax_flow, \
    verify_tyurin_dynamics, zero_curvature_static
from .laxspace import (AlgebraKind, Divisor, check_l_constraints, check_m_constraints, commutator_closure,
                       graded_subspace, random_alpha, random_points, random_tyurin, so_variant_space,
                       solve_constrained_space)
from .cmsystems import tyurin_from_lax


@dataclass
class SuiteResult:
    checks: list = field(default_factory=list)
    tables: dict = field(default_factory=dict)
    artifacts: dict = field(default_factory=dict)

    def add(self, name: str, measured, tol, passed: bool | None = None, relation: str = "<=", **details):
        if passed is None:
            passed = bool(measured <= tol) if relation == "<=" else bool(measured >= tol)
        rec = {"name": name, "measured": measured, "tol": tol, "relation": relation, "passed": bool(passed)}
        if details:
            rec["details"] = details
        self.checks.append(rec)
        return rec

    def fail(self, name: str, error: Exception):
        self.checks.append({"name": name, "measured": None, "tol": None, "relation": "error",
                            "passed": False, "details": {"error": type(error).__name__, "message": str(error)}})

    @property
    def passed(self) -> bool:
        return all(c["passed"] for c in self.checks)


def lattice_from_config(entry: dict) -> ell.Lattice:
    return ell.lattice_from_periods(complex(*entry["omega1"]), complex(*entry["omega3"]))


def random_lattice(rng: np.random.Generator) -> ell.Lattice:
    """A random lattice with ``tau`` in a well-conditioned part of the upper half plane."""
    w1 = 0.5 * np.exp(1j * rng.uniform(-0.4, 0.4))
    tau = rng.uniform(-0.45, 0.45) + 1j * rng.uniform(0.8, 1.6)
    return ell.lattice_from_periods(w1, w1 * tau)


def _away_from_lattice(lat, rng, count, min_dist=0.05):
    w1, w3 = lat.periods
    out = []
    while len(out) < count:
        z = complex(rng.uniform(-0.5, 0.5) * w1 + rng.uniform(-0.5, 0.5) * w3)
        if abs(ell.reduce_to_cell(z, lat)[0]) > min_dist * lat.min_period:
            out.append(z)
    return np.array(out)


# ---------------------------------------------------------------------------
# elliptic-check


def elliptic_suite(cfg: dict, seed: int, tol_scale: float = 1.0) -> SuiteResult:
    rng = np.random.default_rng(seed)
    tol = cfg.get("tolerances", {})
    t_id = tol.get("identity", 1e-9) * tol_scale
    t_eis = tol.get("eisenstein", 1e-8) * tol_scale
    n_lat = int(cfg.get("lattices", 5))
    pairs = int(cfg.get("pairs", 100))
    N = int(cfg.get("eisenstein_N", 200))
    res = SuiteResult()
    lattices = [random_lattice(rng) for _ in range(n_lat)]
    if "lattice" in cfg:
        lattices.insert(0, lattice_from_config(cfg["lattice"]))
    for i, lat in enumerate(lattices):
        z = _away_from_lattice(lat, rng, pairs)
        a = _away_from_lattice(lat, rng, pairs)
        p, dp = ell.wp(z, lat), ell.wp_prime(z, lat)
        lhs, rhs = dp ** 2, 4 * p ** 3 - lat.g2 * p - lat.g3
        scale = np.abs(lhs) + 4 * np.abs(p) ** 3 + abs(lat.g2) * np.abs(p) + abs(lat.g3)
        ode = float(np.max(np.abs(lhs - rhs) / scale))
        prod = ell.sigma(z + a, lat) * ell.sigma(z - a, lat) / (ell.sigma(z, lat) ** 2 * ell.sigma(a, lat) ** 2)
        diff = ell.wp(a, lat) - p
        pid = float(np.max(np.abs(prod - diff) / (np.abs(ell.wp(a, lat)) + np.abs(p))))
        g2, g3 = ell.eisenstein_lattice_sum(lat.omega1, lat.omega3, N=N)
        e2 = abs(g2 - lat.g2) / abs(lat.g2) if abs(lat.g2) > 0 else abs(g2)
        e3 = abs(g3 - lat.g3) / max(abs(lat.g3), abs(lat.g2) ** 1.5)
        tag = {"lattice": i, "tau": [lat.tau.real, lat.tau.imag]}
        res.add(f"wp_ode[{i}]", ode, t_id, **tag)
        res.add(f"sigma_product[{i}]", pid, t_id, **tag)
        res.add(f"eisenstein_g2[{i}]", float(e2), t_eis, **tag)
        res.add(f"eisenstein_g3[{i}]", float(e3), t_eis, **tag)
    return res


# ---------------------------------------------------------------------------
# dim-check


def _kinds(cfg):
    return [AlgebraKind.from_label(k) for k in cfg.get("kinds", ["gl(2)", "gl(3)", "so(4)", "sp(2)"])]


def _generic_divisor(lat, rng, degree, avoid):
    pts = random_points(lat, degree, rng, avoid=avoid)
    return Divisor([(q, 1) for q in pts])


def dim_suite(cfg: dict, seed: int, tol_scale: float = 1.0) -> SuiteResult:
    lat = lattice_from_config(cfg["lattice"])
    rng = np.random.default_rng(seed)
    configs = int(cfg.get("configurations", 3))
    degrees = [int(d) for d in cfg.get("divisor_degrees", [1])]
    graded = [int(m) for m in cfg.get("graded_m", [-2, -1, 0, 1, 2])]
    gap_min = float(cfg.get("gap_min", 1e3))
    spaces = cfg.get("spaces", ["L", "N", "graded"])
    res = SuiteResult()
    rows = []

    def record(kind_label, space, deg, cfg_i, dim, expected, gap, extra=None):
        ok = dim == expected and gap >= gap_min
        row = {"kind": kind_label, "space": space, "degree": deg, "configuration": cfg_i,
               "dimension": dim, "expected": expected, "gap_ratio": gap, "passed": ok}
        if extra:
            row.update(extra)
        rows.append(row)
        res.add(f"dim[{kind_label},{space},deg={deg},cfg={cfg_i}]", int(dim), int(expected), ok, "==",
                gap_ratio=_finite(gap), gap_min=gap_min, **(extra or {}))

    for kind in _kinds(cfg):
        for ci in range(configs):
            try:
                T = random_tyurin(kind, lat, rng)
                for deg in degrees:
                    D = _generic_divisor(lat, rng, deg, T.points)
                    if "L" in spaces:
                        b = solve_constrained_space(kind, D, T, "L", lat)
                        record(kind.label, "L^D", deg, ci, b.dimension, b.expected_dimension, b.gap_ratio)
                    if "N" in spaces:
                        b = solve_constrained_space(kind, D, T, "N", lat)
                        extra = {"value_algebra": b.info["kind"]}
                        if "parameter_count" in b.info:
                            extra["parameter_count"] = b.info["parameter_count"]
                        record(kind.label, "N^D", deg, ci, b.dimension, b.expected_dimension, b.gap_ratio, extra)
                if "graded" in spaces:
                    Pp, Pm = random_points(lat, 2, rng, avoid=T.points)
                    for m in graded:
                        b = graded_subspace(kind, m, Pp, Pm, T, lat)
                        record(kind.label, f"graded_{m}", 0, ci, b.dimension, kind.dim, b.gap_ratio)
            except EllaxError as e:
                res.fail(f"dim[{kind.label},cfg={ci}]", e)
    sv = cfg.get("so_variant")
    if sv:
        kind = AlgebraKind.from_label(sv.get("kind", "so(4)"))
        n = kind.p // 2
        for ci in range(configs):
            try:
                q = random_points(lat, n, rng, avoid=[0j])
                while any(abs(ell.reduce_to_cell(a + b, lat)[0]) < 0.12 * lat.min_period for a in q for b in q):
                    q = random_points(lat, n, rng, avoid=[0j])
                ap = [random_alpha(kind, rng) for _ in q]
                am = [rng.standard_normal(n) + 1j * rng.standard_normal(n) for _ in q]
                for deg in sv.get("divisor_degrees", degrees):
                    D = _generic_divisor(lat, rng, int(deg), q + [-x for x in q])
                    b = so_variant_space(kind, D, q, ap, am, lat)
                    record(kind.label, "N^D(split)", int(deg), ci, b.dimension, b.expected_dimension, b.gap_ratio)
            except EllaxError as e:
                res.fail(f"dim[{kind.label},split,cfg={ci}]", e)
    res.tables["dims"] = rows
    return res


def _finite(x):
    return float(x) if np.isfinite(x) else None


# ---------------------------------------------------------------------------
# algebra-check


def algebra_suite(cfg: dict, seed: int, tol_scale: float = 1.0) -> SuiteResult:
    lat = lattice_from_config(cfg["lattice"])
    rng = np.random.default_rng(seed)
    tol = float(cfg.get("tolerances", {}).get("constraints", 1e-8)) * tol_scale
    pairs = int(cfg.get("pairs", 20))
    configs = int(cfg.get("configurations", 1))
    deg = int(cfg.get("divisor_degree", 1))
    res = SuiteResult()
    for kind in _kinds(cfg):
        for ci in range(configs):
            try:
                T = random_tyurin(kind, lat, rng)
                D = _generic_divisor(lat, rng, deg, T.points)
                b = solve_constrained_space(kind, D, T, "L", lat)
                worst = 0.0
                for j in range(int(cfg.get("elements", 3))):
                    rep = check_l_constraints(b.random_field(rng), T, tol, seed=seed + j)
                    worst = max(worst, rep.max_residual, rep.membership_residual)
                res.add(f"L_constraints[{kind.label},cfg={ci}]", worst, tol)
                worst = 0.0
                for j in range(pairs):
                    rep = commutator_closure(b.random_field(rng), b.random_field(rng), T, tol, seed=seed + j)
                    worst = max(worst, rep.max_residual, rep.membership_residual)
                res.add(f"closure[{kind.label},cfg={ci}]", worst, tol, pairs=pairs)
                bn = solve_constrained_space(kind, D, T, "N", lat)
                rep = check_m_constraints(bn.random_field(rng), bn.tyurin, tol, seed=seed)
                res.add(f"M_constraints[{kind.label},cfg={ci}]",
                        max(rep.max_residual, rep.membership_residual), tol)
            except EllaxError as e:
                res.fail(f"algebra[{kind.label},cfg={ci}]", e)
    return res


# ---------------------------------------------------------------------------
# cm-run


def _system(cfg):
    sysc = cfg.get("system", {"kind": "gl", "n": 3})
    return CouplingData(sysc.get("kind", "gl"), int(sysc.get("n", 3)), epsilon=complex(sysc.get("epsilon", 1.0)))


def state_from_config(entry: dict | None, kind: str, n: int, lat, rng) -> PhaseState:
    entry = entry or {}
    if "q" in entry:
        return PhaseState([complex(*x) for x in entry["q"]], [complex(*x) for x in entry["p"]], lat)
    return random_state(kind, n, lat, rng, min_sep=float(entry.get("min_sep", 0.2)),
                        p_scale=float(entry.get("p_scale", 0.5)), real=bool(entry.get("real", False)))


def cm_suite(cfg: dict, seed: int, tol_scale: float = 1.0) -> SuiteResult:
    lat = lattice_from_config(cfg["lattice"])
    rng = np.random.default_rng(seed)
    tol = cfg.get("tolerances", {})
    res = SuiteResult()
    checks = cfg.get("checks", ["conservation", "isospectrality", "holomorphy"])
    c = _system(cfg)
    if any(k in checks for k in ("conservation", "isospectrality", "holomorphy")):
        s0 = state_from_config(cfg.get("state"), c.kind, c.n, lat, rng)
        res.artifacts["initial_state"] = s0.to_dict()
    if "conservation" in checks or "isospectrality" in checks:
        T, dt = float(cfg.get("T", 1.0)), float(cfg.get("dt", 1e-3))
        H = ClosedFormHamiltonian(c)
        try:
            traj = integrate(s0, H, T, dt, record_every=int(cfg.get("record_every", 10)))
        except EllaxError as e:
            res.fail("integrate", e)
            return res
        res.artifacts["trajectory"] = traj
        h = np.asarray(traj.monitors["H"])
        if "conservation" in checks:
            t_h = float(tol.get("energy", 1e-8)) * tol_scale
            res.add("energy_drift", float(np.max(np.abs(h - h[0]))), t_h, T=T, dt=dt,
                    H0=[h[0].real, h[0].imag])
        if "isospectrality" in checks:
            zs = [complex(*z) for z in cfg.get("z_samples", [[0.11, 0.07], [-0.13, 0.21], [0.19, -0.17],
                                                               [0.03, 0.29], [-0.21, -0.09]])]
            si = spectral_invariants(cm_lax(c), traj, zs)
            t_i = float(tol.get("isospectral", 1e-6)) * tol_scale
            res.add("charpoly_drift", si["max_abs_drift"], t_i, samples=len(zs),
                    relative_drift=si["max_drift"])
    if "holomorphy" in checks:
        radius = float(cfg.get("holomorphy_radius", 1e-2))
        scan = holomorphy_scan(cm_lax(c), s0, s0.q, radius=radius)
        ratio = max(max(r["ratio"], 1 / r["ratio"]) for r in scan)
        entry = min(r["max_entry"] for r in scan)
        res.add("spectrum_ratio", float(ratio), float(tol.get("holomorphy_ratio", 2.0)), radius=radius)
        res.add("pole_entry", float(entry), float(tol.get("pole_entry", 1e2)), relation=">=")
    if "residue_hamiltonians" in checks:
        t_r = float(tol.get("residue", 1e-9)) * tol_scale
        for system in cfg.get("residue_systems", [{"kind": "gl", "n": 3}, {"kind": "so", "n": 2},
                                                {"kind": "sp", "n": 1}]):
            cc = CouplingData(system["kind"], int(system["n"]), epsilon=complex(system.get("epsilon", 1.0)))
            worst = 0.0
            for _ in range(int(cfg.get("residue_states", 50))):
                s = random_state(cc.kind, cc.n, lat, rng, min_sep=0.12)
                h1 = hamiltonian_closed_form(s, cc)
                h2 = hamiltonian_via_residue(lax_field(s, cc), 1, 1, 0j)
                worst = max(worst, abs(h1 - h2) / (1 + abs(h1)))
            label = {"gl": f"gl({cc.n})", "so": f"so({2 * cc.n})", "sp": f"sp({2 * cc.n})"}[cc.kind]
            res.add(f"residue_vs_closed[{label}]", float(worst), t_r)
    return res


# ---------------------------------------------------------------------------
# hierarchy-check


def hierarchy_suite(cfg: dict, seed: int, tol_scale: float = 1.0) -> SuiteResult:
    lat = lattice_from_config(cfg["lattice"])
    rng = np.random.default_rng(seed)
    tol = cfg.get("tolerances", {})
    res = SuiteResult()
    checks = cfg.get("checks", ["construct", "lax_flow", "tyurin_dynamics", "zero_curvature", "involution"])
    c = _system(cfg)
    index_cfg = cfg.get("index", {"P": [0, 0], "k": 1, "m": 1})
    a = HierarchyIndex(complex(*index_cfg.get("P", [0, 0])), int(index_cfg.get("k", 1)), int(index_cfg.get("m", 1)),
                       kind_tag=c.kind)
    P0 = complex(*cfg.get("P0", [0.23, 0.17]))
    flow_checks = [k for k in checks if k in ("construct", "lax_flow", "tyurin_dynamics", "zero_curvature")]
    if flow_checks:
        s = state_from_config(cfg.get("state"), c.kind, c.n, lat, rng)
        res.artifacts["state"] = s.to_dict()
        T = tyurin_from_lax(s, c)
        Lf = lax_field(s, c)
        try:
            ma = construct_ma(Lf, a, T, P0)
            t_s = float(tol.get("solve", 1e-8)) * tol_scale
            res.add("ma_solve_residual", ma.residual, t_s, **ma.to_dict())
            res.add("ma_radius_check", ma.radius_check, t_s)
            res.add("ma_nullity", ma.nullity, 0, ma.nullity == 0, "==",
                    count=f"{ma.space_dimension} - {ma.n_conditions} conditions")
            if "lax_flow" in checks:
                zs = cfg.get("z_samples")
                zs = [complex(*z) for z in zs] if zs else None
                t_l = float(tol.get("lax_flow", 1e-6)) * tol_scale
                rep = verify_lax_flow(s, c, a, float(cfg.get("dt", 1e-3)), zs, t_l, P0=P0)
                res.add("lax_flow_deviation", rep.deviations[-1], t_l, dts=rep.dts, deviations=rep.deviations,
                        literal_deviations=rep.literal_deviations, gauge_residual=rep.gauge_residual)
                res.add("lax_flow_order", min(rep.orders[:2]), 1.7, relation=">=", orders=rep.orders)
            if "tyurin_dynamics" in checks:
                t_t = float(tol.get("tyurin", 1e-6)) * tol_scale
                rep = verify_tyurin_dynamics(s, c, a, float(cfg.get("tyurin_dt", 1e-4)), t_t, P0=P0)
                res.add("tyurin_velocity", rep.deviation, t_t, alpha_residual=rep.alpha_residual)
            if "zero_curvature" in checks:
                b = HierarchyIndex(a.P, a.k + 1, a.m)
                mb = construct_ma(Lf, b, T, P0)
                zc = zero_curvature_static(ma, mb, T)
                res.add("zero_curvature_static", max(zc["double_pole_cancellation"], zc["higher_orders"]),
                        float(tol.get("zero_curvature", 1e-8)) * tol_scale)
        except EllaxError as e:
            res.fail("hierarchy", e)
    if "involution" in checks:
        inv = cfg.get("involution", {})
        ci = CouplingData(inv.get("kind", "gl"), int(inv.get("n", 3)))
        idx = [HierarchyIndex(0j, int(k), int(m)) for k, m in inv.get("indices", [[1, 1], [2, 1], [3, 1]])]
        si = state_from_config(inv.get("state"), ci.kind, ci.n, lat, rng)
        t_i = float(tol.get("involution", 1e-6)) * tol_scale
        recs = involution_check(si, ci, idx, float(inv.get("h", 1e-3)))
        base = idx[0]
        for r in recs:
            if inv.get("pairs", "first") == "first" and r["a"] != base.to_dict():
                continue
            res.add(f"bracket[({r['a']['k']},{r['a']['m']}),({r['b']['k']},{r['b']['m']})]", r["relative"], t_i,
                    bracket=r["bracket"], scale=r["scale"])
    return res


SUITES = {"elliptic-check": elliptic_suite, "dim-check": dim_suite, "algebra-check": algebra_suite,
          "cm-run": cm_suite, "hierarchy-check": hierarchy_suite}
