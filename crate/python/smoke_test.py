"""Smoke test for the aeqsim extension module.

Build and install first, e.g.  pip install --no-build-isolation ./crates/py
"""

import json
import math

import aeqsim


def main():
    sr = aeqsim.Species.sr87()
    zeros = sr.zero_crossings("3P0", 600.0, 650.0)
    assert len(zeros) == 1 and abs(zeros[0] - 627.0) < 5.0, zeros
    assert abs(sr.zeeman_shift("1S0", -4.5, 1e-3) - sr.zeeman_shift("1S0", -3.5, 1e-3) - 0.185) < 1e-9

    p = aeqsim.BlockadeParams.from_ratios(100.0, 0.0)
    out = p.gate_outcome()
    assert abs(out["loss_01"] - (1 - math.exp(-2 * math.pi / 100))) < 0.1 * out["loss_01"]
    c_g, c_e = p.evolve(2 * math.pi, rk4=True)
    assert abs(abs(c_g) ** 2 + abs(c_e) ** 2 - (1 - out["loss_01"])) < 1e-6

    phases = aeqsim.phase_gate_truth_table(1000.0, 0.5e-3)
    assert abs(phases[1] - math.pi) < 1e-9 and phases[0] == phases[2] == phases[3] == 0.0

    circuit = {"n_qubits": 6, "gates": [{"kind": "CZ", "targets": [0, 5]}]}
    schedule = aeqsim.compile_circuit(json.dumps(circuit), json.dumps({"n_sites": 11}))
    duration = aeqsim.schedule_duration(schedule)
    assert 1e-3 <= duration <= 10e-3, duration
    budget = aeqsim.price(schedule)
    assert budget["total_fidelity"] > 0.99, budget

    atoms = [{"site": q, "level": "1S0", "m": "-9/2"} for q in range(5)]
    atoms.append({"site": 5, "level": "1S0", "m": "-7/2"})
    reg = aeqsim.Register.from_json(json.dumps({"n_sites": 11, "gradient_g_per_cm": 100, "atoms": atoms}))
    reg.run(schedule)
    (branch,) = reg.to_dict()["branches"]
    assert abs(branch["phase"] - math.pi) < 1e-9
    assert [a["site"] for a in branch["atoms"]] == list(range(6))
    print(f"ok: 3P0 zero {zeros[0]:.3f} nm, CZ(0,5) {duration * 1e3:.2f} ms, F={budget['total_fidelity']:.4f}")


if __name__ == "__main__":
    main()
