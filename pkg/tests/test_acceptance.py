"""The nine acceptance criteria, each driven by its shipped config through the CLI.

Every test prints one ``PASS``/``FAIL`` line (repeated in the terminal
summary) and then asserts on the measured values at the criterion's own
tolerances, independently of the tolerances stored in the config.
"""

import json
import re
from pathlib import Path

import pytest

from ellax import cli

from conftest import ACCEPTANCE_LINES

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def run_config(name, out):
    code = cli.main(["--config", str(CONFIGS / name), "--out", str(out)])
    report = json.loads((out / "report.json").read_text())
    return code, report


def checks(report, prefix):
    return [c for c in report["checks"] if re.sub(r"\[.*", "", c["name"]) == prefix]


def announce(n, ok, text):
    line = f"{'PASS' if ok else 'FAIL'} criterion {n}: {text}"
    print(line)
    ACCEPTANCE_LINES.append(line)


def worst(report, prefix):
    cs = checks(report, prefix)
    assert cs, f"no checks named {prefix}"
    return max(c["measured"] for c in cs), len(cs)


def test_criterion_1_weierstrass(tmp_path):
    code, rep = run_config("acc1_elliptic.json", tmp_path)
    ode, n = worst(rep, "wp_ode")
    prod, _ = worst(rep, "sigma_product")
    g2, _ = worst(rep, "eisenstein_g2")
    g3, _ = worst(rep, "eisenstein_g3")
    ok = code == 0 and n == 5 and ode <= 1e-9 and prod <= 1e-9 and max(g2, g3) <= 1e-8
    announce(1, ok, f"ode {ode:.1e}, product {prod:.1e}, eisenstein {max(g2, g3):.1e} over {n} lattices")
    assert rep["config"]["pairs"] == 100
    assert ok


def test_criterion_2_dimensions(tmp_path):
    code, rep = run_config("acc2_dimensions.json", tmp_path)
    rows = rep["dims"]
    bad = [r for r in rows if not (r["dimension"] == r["expected"] and (r["gap_ratio"] is None or r["gap_ratio"] >= 1e3))]
    spaces = {(r["kind"], r["space"]) for r in rows}
    for k in ("gl(2)", "gl(3)", "so(4)", "sp(2)"):
        for s in ["L^D", "N^D"] + [f"graded_{m}" for m in range(-2, 3)]:
            assert (k, s) in spaces
    assert ("so(4)", "N^D(split)") in spaces
    assert all(r["expected"] == 6 * (r["degree"] + 1) for r in rows if r["kind"] == "sp(2)" and r["space"] == "N^D")
    assert not [c for c in rep["checks"] if c["relation"] == "error"]
    detail = "; ".join(sorted({f"{r['kind']} {r['space']} deg {r['degree']}: {r['dimension']} vs {r['expected']}"
                               for r in bad}))
    ok = code == 0 and not bad
    announce(2, ok, f"{len(rows) - len(bad)}/{len(rows)} dimension rows match" + (f" ({detail})" if bad else ""))
    assert ok


def test_criterion_3_closure(tmp_path):
    code, rep = run_config("acc3_closure.json", tmp_path)
    m, n = worst(rep, "closure")
    ok = code == 0 and m <= 1e-8 and rep["config"]["pairs"] == 20
    announce(3, ok, f"commutator constraint residual {m:.1e} over {n} kinds")
    assert ok


def test_criterion_4_residue_hamiltonians(tmp_path):
    code, rep = run_config("acc4_residue_hamiltonians.json", tmp_path)
    m, n = worst(rep, "residue_vs_closed")
    ok = code == 0 and n == 3 and m <= 1e-9 and rep["config"]["residue_states"] == 50
    announce(4, ok, f"residue vs closed form {m:.1e} (gl(3), so(4), sp(2))")
    assert ok


def test_criterion_5_conservation(tmp_path):
    code, rep = run_config("acc5_conservation.json", tmp_path)
    dh, _ = worst(rep, "energy_drift")
    dc, _ = worst(rep, "charpoly_drift")
    cfg = rep["config"]
    assert cfg["T"] == 1.0 and cfg["dt"] == 1e-3 and len(cfg["z_samples"]) == 5
    assert (tmp_path / "trajectory.csv").exists()
    ok = code == 0 and dh <= 1e-8 and dc <= 1e-6
    announce(5, ok, f"|dH| {dh:.1e}, char-poly drift {dc:.1e}")
    assert ok


def test_criterion_6_hierarchy(tmp_path):
    code, rep = run_config("acc6_hierarchy.json", tmp_path)
    res, _ = worst(rep, "ma_solve_residual")
    null, _ = worst(rep, "ma_nullity")
    dev_rec = checks(rep, "lax_flow_deviation")[0]
    devs = dev_rec["details"]["deviations"]
    orders = checks(rep, "lax_flow_order")[0]["details"]["orders"]
    tyu, _ = worst(rep, "tyurin_velocity")
    assert dev_rec["details"]["dts"][0] == 1e-3 and rep["config"]["system"]["n"] == 2
    ok = (code == 0 and null == 0 and res < 1e-8 and devs[-1] <= 1e-6
          and all(1.8 <= o <= 2.2 for o in orders[:2]) and tyu <= 1e-6)
    announce(6, ok, f"solve {res:.1e}, Lax deviation {devs[-1]:.1e} (orders {', '.join(f'{o:.2f}' for o in orders)}), "
                    f"Tyurin {tyu:.1e}")
    assert ok


def test_criterion_7_involution(tmp_path):
    code, rep = run_config("acc7_involution.json", tmp_path)
    m, n = worst(rep, "bracket")
    ok = code == 0 and n == 2 and m <= 1e-6
    announce(7, ok, f"largest relative bracket {m:.1e} over {n} pairs")
    assert ok


def test_criterion_8_holomorphy(tmp_path):
    code, rep = run_config("acc8_holomorphy.json", tmp_path)
    ratio, _ = worst(rep, "spectrum_ratio")
    entry = checks(rep, "pole_entry")[0]["measured"]
    assert rep["config"]["holomorphy_radius"] == 1e-2
    ok = code == 0 and ratio <= 2.0 and entry > 1e2
    announce(8, ok, f"eigenvalue ratio {ratio:.3f}, smallest max entry {entry:.1f}")
    assert ok


def test_criterion_9_determinism(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    run_config("acc9_determinism.json", a)
    run_config("acc9_determinism.json", b)
    same = (a / "report.json").read_bytes() == (b / "report.json").read_bytes()
    same_csv = (a / "trajectory.csv").read_bytes() == (b / "trajectory.csv").read_bytes()
    ok = same and same_csv
    announce(9, ok, "report.json byte-identical across two runs" if ok else "reports differ")
    assert ok
