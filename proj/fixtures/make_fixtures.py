#!/usr/bin/env python3
"""Regenerates the feeder fixtures in this directory.

Line data uses the IEEE 13-node feeder overhead/underground configurations
(ohm/mile, microsiemens/mile). The regulator is dropped, the substation bus is the
slack, the in-line transformer and the switch become series impedances, and delta
loads are assigned to the phases they are connected to.
"""
import json
import math
import pathlib

KV, KVA = 4.16, 5000.0
Z_BASE = KV * KV * 1000.0 / KVA

CONFIGS = {
    601: ("abc",
          [[0.3465 + 1.0179j, 0.1560 + 0.5017j, 0.1580 + 0.4236j],
           [0.1560 + 0.5017j, 0.3375 + 1.0478j, 0.1535 + 0.3849j],
           [0.1580 + 0.4236j, 0.1535 + 0.3849j, 0.3414 + 1.0348j]],
          [[6.2998, -1.9958, -1.2595], [-1.9958, 5.9597, -0.7417], [-1.2595, -0.7417, 5.6386]]),
    602: ("abc",
          [[0.7526 + 1.1814j, 0.1580 + 0.4236j, 0.1560 + 0.5017j],
           [0.1580 + 0.4236j, 0.7475 + 1.1983j, 0.1535 + 0.3849j],
           [0.1560 + 0.5017j, 0.1535 + 0.3849j, 0.7436 + 1.2112j]],
          [[5.6990, -1.0817, -1.6905], [-1.0817, 5.1795, -0.6588], [-1.6905, -0.6588, 5.4246]]),
    603: ("bc",
          [[1.3294 + 1.3471j, 0.2066 + 0.4591j], [0.2066 + 0.4591j, 1.3238 + 1.3569j]],
          [[4.7097, -0.8999], [-0.8999, 4.6658]]),
    604: ("ac",
          [[1.3238 + 1.3569j, 0.2066 + 0.4591j], [0.2066 + 0.4591j, 1.3294 + 1.3471j]],
          [[4.6658, -0.8999], [-0.8999, 4.7097]]),
    605: ("c", [[1.3292 + 1.3475j]], [[4.5193]]),
    606: ("abc",
          [[0.7982 + 0.4463j, 0.3192 + 0.0328j, 0.2849 - 0.0143j],
           [0.3192 + 0.0328j, 0.7891 + 0.4041j, 0.3192 + 0.0328j],
           [0.2849 - 0.0143j, 0.3192 + 0.0328j, 0.7982 + 0.4463j]],
          [[96.8897, 0, 0], [0, 96.8897, 0], [0, 0, 96.8897]]),
    607: ("a", [[1.3425 + 0.5124j]], [[88.9912]]),
}


def pairs(matrix):
    return [[round(z.real, 12), round(z.imag, 12)] for row in matrix for z in row]


def overhead(frm, to, config, feet, phases=None, shunt=True):
    cphases, z, b = CONFIGS[config]
    miles = feet / 5280.0
    n = len(cphases)
    zpu = [[complex(z[i][j]) * miles / Z_BASE for j in range(n)] for i in range(n)]
    ypu = [[complex(0.0, b[i][j] * 1e-6 * miles * Z_BASE) for j in range(n)] for i in range(n)]
    line = {"from": frm, "to": to, "phases": phases or cphases, "z_series": pairs(zpu)}
    if shunt:
        line["y_shunt"] = pairs(ypu)
    return line


def series(frm, to, phases, z):
    n = len(phases)
    zpu = [[z if i == j else 0j for j in range(n)] for i in range(n)]
    return {"from": frm, "to": to, "phases": phases, "z_series": pairs(zpu)}


def ieee13():
    # 0:650 1:632 2:633 3:634 4:645 5:646 6:671 7:680 8:684 9:611 10:652 11:692 12:675
    buses = [(0, "abc"), (1, "abc"), (2, "abc"), (3, "abc"), (4, "bc"), (5, "bc"), (6, "abc"),
             (7, "abc"), (8, "ac"), (9, "c"), (10, "a"), (11, "abc"), (12, "abc")]
    lines = [
        overhead(0, 1, 601, 2000),
        overhead(1, 2, 602, 500),
        series(2, 3, "abc", (0.011 + 0.02j) * KVA / 500.0),  # XFM-1, 500 kVA
        overhead(1, 4, 603, 500),
        overhead(4, 5, 603, 300),
        overhead(1, 6, 601, 2000),
        overhead(6, 7, 601, 1000),
        overhead(6, 8, 604, 300),
        overhead(8, 9, 605, 300),
        overhead(8, 10, 607, 800),
        series(6, 11, "abc", 1e-4 + 1e-4j),  # closed switch
        overhead(11, 12, 606, 500),
    ]
    loads = [
        {"bus": 3, "phases": "abc", "kw": [160, 120, 120], "kvar": [110, 90, 90]},
        {"bus": 4, "phases": "b", "kw": [170], "kvar": [125]},
        {"bus": 5, "phases": "bc", "kw": [115, 115], "kvar": [66, 66]},
        {"bus": 10, "phases": "a", "kw": [128], "kvar": [86]},
        {"bus": 6, "phases": "abc", "kw": [385, 385, 385], "kvar": [220, 220, 220]},
        {"bus": 12, "phases": "abc", "kw": [485, 68, 290], "kvar": [190, 60, 212]},
        {"bus": 11, "phases": "c", "kw": [170], "kvar": [151]},
        {"bus": 9, "phases": "c", "kw": [170], "kvar": [80]},
        # distributed 632-671 load, split between the two ends
        {"bus": 1, "phases": "abc", "kw": [8.5, 33, 58.5], "kvar": [5, 19, 34]},
        {"bus": 6, "phases": "abc", "kw": [8.5, 33, 58.5], "kvar": [5, 19, 34]},
        # shunt capacitor banks as constant reactive injections
        {"bus": 12, "phases": "abc", "kw": [0, 0, 0], "kvar": [-200, -200, -200]},
        {"bus": 9, "phases": "c", "kw": [0], "kvar": [-100]},
    ]
    der = [
        {"bus": 3, "phases": "abc", "kw": [100, 100, 100], "kvar": [0, 0, 0]},
        {"bus": 12, "phases": "abc", "kw": [150, 150, 150], "kvar": [0, 0, 0]},
        {"bus": 7, "phases": "abc", "kw": [100, 100, 100], "kvar": [0, 0, 0]},
        {"bus": 9, "phases": "c", "kw": [80], "kvar": [0]},
        {"bus": 10, "phases": "a", "kw": [60], "kvar": [0]},
        {"bus": 5, "phases": "bc", "kw": [60, 60], "kvar": [0, 0]},
    ]
    return {
        "name": "ieee13-equivalent",
        "base": {"kV": KV, "kVA": KVA},
        "buses": [{"id": i, "phases": p} for i, p in buses],
        "lines": lines,
        "loads": loads,
        "der": der,
    }


def four_bus():
    return {
        "name": "four-bus",
        "base": {"kV": KV, "kVA": KVA},
        "buses": [{"id": 0, "phases": "abc"}, {"id": 1, "phases": "abc"},
                  {"id": 2, "phases": "ac"}, {"id": 3, "phases": "b"}],
        "lines": [
            overhead(0, 1, 601, 2000),
            overhead(1, 2, 604, 500),
            {**overhead(1, 3, 605, 500), "phases": "b"},
        ],
        "loads": [
            {"bus": 1, "phases": "abc", "kw": [160, 120, 120], "kvar": [110, 90, 90]},
            {"bus": 2, "phases": "ac", "kw": [200, 150], "kvar": [100, 80]},
            {"bus": 3, "phases": "b", "kw": [170], "kvar": [125]},
        ],
        "der": [{"bus": 2, "phases": "a", "kw": [80], "kvar": [0]}],
    }


def b_lateral():
    return {
        "name": "b-phase-lateral",
        "base": {"kV": KV, "kVA": KVA},
        "buses": [{"id": 0, "phases": "abc"}, {"id": 1, "phases": "b"}, {"id": 2, "phases": "b"}],
        "lines": [
            {**overhead(0, 1, 605, 1000), "phases": "b"},
            {**overhead(1, 2, 605, 800), "phases": "b"},
        ],
        "loads": [
            {"bus": 1, "phases": "b", "kw": [150], "kvar": [80]},
            {"bus": 2, "phases": "b", "kw": [200], "kvar": [110]},
        ],
    }


if __name__ == "__main__":
    here = pathlib.Path(__file__).parent
    for name, doc in (("four_bus.json", four_bus()), ("ieee13_equivalent.json", ieee13()),
                      ("b_lateral.json", b_lateral())):
        (here / name).write_text(json.dumps(doc, indent=1) + "\n")
