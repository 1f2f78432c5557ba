#!/usr/bin/env python3
"""Writes scenarios/paris_like.scenario and its influent CSV.

Three plants, two inlets with a diurnal dry-weather pattern. Initial plant
concentrations are the steady state of each reactor under its initial
inflow, found by forward integration.
"""

import argparse
import json
import math
from pathlib import Path

DELTA = 3.0
PERIODS = 200
HORIZON = 160

SPECIES = ["BOD", "NH4", "NO2", "NO3", "X"]

# mu [1/day], k [-] (tabulated x 1e-3), yields, death [1/day]
TABLE = [
    ([3.99, 0.84, 1.68, 1.21], [13.67, 6.59, 2.46, 1.40], 0.28, 0.68, 0.67, 0.24, 0.01),
    ([2.56, 0.83, 1.27, 1.38], [11.65, 14.98, 1.15, 2.69], 0.25, 0.64, 0.67, 0.24, 0.1),
    ([1.93, 0.89, 0.92, 0.85], [14.26, 8.53, 2.55, 4.20], 0.27, 0.70, 0.67, 0.24, 0.1),
]

INLET_CONC = [0.25, 0.035, 0.0005, 0.001]  # kg/m3, no biomass in the sewage


def rates(plant, xi):
    mu, k, *_ = TABLE[plant]
    x = max(xi[4], 0.0)
    out = []
    for j in range(4):
        s = max(xi[j], 0.0)
        m = mu[j] / 1440.0
        kc = k[j] * 1e-3
        out.append(m * s * x / (kc * x + s) if kc * x + s > 0 else 0.0)
    return out


def steady_state(plant, q, v_bar, x0=2.0, minutes=40 * 1440, h=0.5):
    mu, k, y1, y2, y3, y4, death = TABLE[plant]
    xi = INLET_CONC + [x0]
    xin = INLET_CONC + [0.0]
    d = q / v_bar
    kd = death / 1440.0
    for _ in range(int(minutes / h)):
        t = rates(plant, xi)
        dx = [
            -t[0] + d * (xin[0] - xi[0]),
            -t[1] + d * (xin[1] - xi[1]),
            t[1] / y1 - t[2] + d * (xin[2] - xi[2]),
            t[2] / y2 - t[3] + d * (xin[3] - xi[3]),
            y3 * t[0] + y4 * t[1] - kd * xi[4] + 0.1 * d * (xin[4] - xi[4]),
        ]
        xi = [max(a + h * b, 0.0) for a, b in zip(xi, dx)]
    return xi


def diurnal(t_min, mean, amp, phase):
    return mean * (1.0 + amp * math.sin(2.0 * math.pi * (t_min / 1440.0) - phase))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=str(Path(__file__).resolve().parent.parent / "scenarios"))
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    tanks = [
        {"id": "V1", "kind": "virtual", "v_max": 60000, "external_inflow": True},
        {"id": "V2", "kind": "virtual", "v_max": 60000, "external_inflow": True},
        {"id": "D1", "kind": "diversion"},
        {"id": "D2", "kind": "diversion"},
        {"id": "D3", "kind": "diversion"},
        {"id": "R1", "kind": "real", "v_max": 150000, "beta": 0.02},
        {"id": "V3", "kind": "virtual", "v_max": 80000, "beta": 0.03},
        {"id": "V4", "kind": "virtual", "v_max": 40000},
        {"id": "V5", "kind": "virtual", "v_max": 40000},
        {"id": "V6", "kind": "virtual", "v_max": 40000},
        {"id": "V7", "kind": "virtual", "v_max": 30000},
        {"id": "P1", "kind": "plant", "v_bar": 250000, "q_out_max": 1100},
        {"id": "P2", "kind": "plant", "v_bar": 500000, "q_out_max": 2000},
        {"id": "P3", "kind": "plant", "v_bar": 250000, "q_out_max": 1000},
    ]
    pipes = [
        {"label": "G1", "from": "V1", "to": "D1", "control": "pump_or_gate", "q_max": 2200, "delay_min": 6},
        {"from": "D1", "to": "P1", "control": "diversion_branch", "q_max": 1500, "delay_min": 3},
        {"from": "D1", "to": "V3", "control": "diversion_branch", "q_max": 2500, "delay_min": 6},
        {"label": "G2", "from": "V2", "to": "D2", "control": "pump_or_gate", "q_max": 2500, "delay_min": 6},
        {"from": "D2", "to": "R1", "control": "diversion_branch", "q_max": 2000, "delay_min": 3},
        {"from": "D2", "to": "V4", "control": "diversion_branch", "q_max": 2500, "delay_min": 6},
        {"label": "PU1", "from": "R1", "to": "V4", "control": "volume_limited", "q_max": 1500},
        {"from": "V3", "to": "V5", "control": "uncontrolled", "q_max": 3000, "delay_min": 6},
        {"label": "G3", "from": "V4", "to": "V6", "control": "pump_or_gate", "q_max": 3000, "delay_min": 6},
        {"label": "G4", "from": "V5", "to": "D3", "control": "pump_or_gate", "q_max": 2500, "delay_min": 6},
        {"from": "D3", "to": "P2", "control": "diversion_branch", "q_max": 2500, "delay_min": 3},
        {"from": "D3", "to": "V7", "control": "diversion_branch", "q_max": 2000, "delay_min": 6},
        {"label": "G5", "from": "V6", "to": "P2", "control": "pump_or_gate", "q_max": 2500, "delay_min": 9},
        {"label": "PU2", "from": "V7", "to": "P3", "control": "pump_or_gate", "q_max": 1500, "delay_min": 3},
    ]
    setpoints = {
        "G1": 1550, "D1->P1": 1000, "D1->V3": 550,
        "G2": 1550, "D2->R1": 300, "D2->V4": 1250, "PU1": 300,
        "G3": 1000, "G4": 600, "D3->P2": 300, "D3->V7": 300,
        "G5": 1000, "PU2": 300,
    }
    plant_q = {"P1": 1000.0, "P2": 1300.0, "P3": 300.0}
    v_bar = {"P1": 250000.0, "P2": 500000.0, "P3": 250000.0}
    conc = {"default": INLET_CONC + [0.0]}
    for i, p in enumerate(["P1", "P2", "P3"]):
        conc[p] = [round(c, 8) for c in steady_state(i, plant_q[p], v_bar[p])]

    doc = {
        "name": "paris_like",
        "species": SPECIES,
        "timing": {
            "delta_min": DELTA,
            "control_period_min": 15.0,
            "horizon_steps": HORIZON,
            "sim_periods": PERIODS,
            "am_order": 3,
        },
        "network": {"tanks": tanks, "pipes": pipes},
        "biology": {
            "P1": {"preset": "case_study_plant_1"},
            "P2": {"preset": "case_study_plant_2"},
            "P3": {"preset": "case_study_plant_3"},
        },
        "weights": {
            "pollutant_release": [1, 1, 1, 1, 0],
            "regulation_violation": [1, 1, 1, 1, 0],
            "microbial_growth": [0.01, 0.01, 0.01, 0.01, 0],
            "slope": 1e-2,
            "curvature": 1e-2,
            "final_volume": 1e-3,
            "total_volume": 1e-5,
            "plant_balance": 10,
            "time_balance": 10,
            "flooding": 1000,
            "cso": 1000,
        },
        "xi_max": [0.025, 0.004, 0.001, 0.05, 1e30],
        "initial_state": {
            "volumes": {"V1": 25000, "V2": 25000, "R1": 60000, "V3": 18333,
                        "V4": 20000, "V5": 20000, "V6": 20000, "V7": 15000},
            "concentrations": conc,
            "setpoints": setpoints,
            "plant_outflow": plant_q,
        },
        "influent": {"csv": "paris_like_influent.csv"},
        "options": {
            "solver": {"tol": 1e-7, "max_iter": 200, "time_limit": 120},
            "volume_margin": 0.02,
        },
    }
    (out / "paris_like.scenario").write_text(json.dumps(doc, indent=2) + "\n")

    last = (PERIODS * 5 + HORIZON + 4) * DELTA
    with open(out / "paris_like_influent.csv", "w") as f:
        f.write("t_min,inlet_id,flow,c_BOD,c_NH4,c_NO2,c_NO3\n")
        t = -30.0
        while t <= last:
            for inlet, phase in (("V1", 0.0), ("V2", 0.6)):
                q = diurnal(t, 1550.0, 0.4, phase)
                scale = 1.0 + 0.2 * math.sin(2.0 * math.pi * t / 1440.0 - phase)
                c = [round(x * scale, 8) for x in INLET_CONC]
                f.write(f"{t:g},{inlet},{q:.4f},{c[0]},{c[1]},{c[2]},{c[3]}\n")
            t += DELTA


if __name__ == "__main__":
    main()
