#!/usr/bin/env python3
"""Writes bundled.toml, the desk-scale European case study.

Timetables, capacities, cost rates and hub operation times are the published
case-study values. Distances are great-circle kilometres between the city
centres below. Travel speeds, shipment volumes, module counts and origin
arrival times are synthetic.

    python3 scenarios/generate_bundled.py > scenarios/bundled.toml
"""

import math

CITY = {
    "nantes": (47.218, -1.554),
    "rotterdam": (51.924, 4.478),
    "paris": (48.857, 2.352),
    "lyon": (45.764, 4.836),
    "brussels": (50.850, 4.352),
    "bern": (46.948, 7.447),
    "hamburg": (53.551, 9.994),
    "mannheim": (49.488, 8.466),
    "milan": (45.464, 9.190),
    "berlin": (52.520, 13.405),
    "prague": (50.076, 14.438),
    "munich": (48.137, 11.576),
    "zurich": (47.377, 8.542),
    "stuttgart": (48.776, 9.183),
    "turin": (45.070, 7.687),
    "genoa": (44.406, 8.934),
    "naples": (40.852, 14.268),
    "vienna": (48.208, 16.373),
    "warsaw": (52.230, 21.012),
    "budapest": (47.498, 19.040),
    "kyiv": (50.450, 30.524),
    "moscow": (55.756, 37.617),
}

ORIGINS = ["rotterdam", "paris", "lyon", "brussels", "bern"]
HUB_HOURS = [
    ("hamburg", 2), ("mannheim", 1), ("milan", 1), ("berlin", 2), ("prague", 2),
    ("munich", 1), ("zurich", 2), ("stuttgart", 2), ("turin", 3), ("genoa", 1),
    ("naples", 1), ("vienna", 2), ("warsaw", 1),
]
DESTINATIONS = ["budapest", "kyiv"]

TRAIN_DEPARTURES = ["9:00", "13:00", "20:00"]
TRAIN_CAP_IN = [21, 18, 26]
TRAIN_CAP_OUT = [25, 21, 27]
TRUCK_DEPARTURES = ["6:30", "7:30", "8:30", "9:30", "11:30", "12:30", "13:30", "14:30",
                    "16:00", "17:30", "18:30", "19:30", "20:30", "21:30", "23:30"]
TRUCK_CAP_IN = [8, 9, 6, 8, 7, 8, 11, 10, 12, 10, 9, 10, 6, 15, 11]
TRUCK_CAP_OUT = [8, 7, 5, 9, 6, 8, 8, 7, 9, 7, 8, 10, 11, 12, 10]
DIRECT_CAP = [10, 9, 6, 12, 7, 8, 6, 8, 4, 5, 10, 9, 6, 12, 7, 8, 6, 2, 4, 5]

# per-container rates over a 33 m³ twenty-foot container
CONTAINER_M3 = 33.0
TRUCK_RATE, TRAIN_RATE, DIRECT_RATE = 1.2, 0.62, 3.78

# synthetic
TRUCK_KMH, TRAIN_KMH, DIRECT_KMH = 70.0, 60.0, 80.0
MAX_FIRST_LEG_KM = 720.0
MAX_SECOND_LEG_KM = 1400.0
# hours between successive dispatches from Nantes towards the same origin
DISPATCH_GAP = 3.0

# (origin, module volumes in m³, destinations, priority); at most 12 m³ per
# container so that a single-module container still fits a vehicle
SHIPMENTS = [
    ("rotterdam", [2.0, 2.0, 2.0, 2.0, 2.0], ["kyiv"], 1.0),
    ("rotterdam", [3.0, 3.0, 3.0], ["budapest", "kyiv"], 1.0),
    ("rotterdam", [1.5, 1.5, 1.5, 1.5, 1.5, 1.5, 1.5], ["budapest"], 2.0),
    ("rotterdam", [4.0, 4.0], ["kyiv"], 1.0),
    ("paris", [2.5, 2.5, 2.5, 2.5], ["budapest"], 1.0),
    ("paris", [1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0], ["budapest", "kyiv"], 1.0),
    ("paris", [3.5, 3.5, 3.5], ["kyiv"], 1.0),
    ("paris", [2.0, 2.0, 2.0, 2.0, 2.0, 2.0], ["budapest"], 2.0),
    ("lyon", [5.0, 5.0], ["budapest"], 1.0),
    ("lyon", [1.5, 1.5, 1.5, 1.5, 1.5, 1.5], ["kyiv"], 1.0),
    ("lyon", [1.5, 1.5, 1.5, 1.5, 1.5, 1.5, 1.5, 1.5], ["budapest", "kyiv"], 1.0),
    ("lyon", [3.0, 3.0, 3.0, 3.0], ["budapest"], 1.0),
    ("brussels", [2.0, 2.0, 2.0, 2.0, 2.0], ["kyiv"], 2.0),
    ("brussels", [6.0], ["budapest"], 1.0),
    ("brussels", [1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0], ["budapest", "kyiv"], 1.0),
    ("brussels", [3.0, 3.0, 3.0], ["budapest"], 1.0),
    ("bern", [2.0, 2.0, 2.0, 2.0], ["budapest"], 1.0),
    ("bern", [4.5, 4.5], ["kyiv"], 1.0),
    ("bern", [1.5, 1.5, 1.5, 1.5, 1.5, 1.5, 1.5], ["budapest", "kyiv"], 2.0),
    ("bern", [2.0, 2.0, 2.0, 2.0, 2.0, 2.0], ["kyiv"], 1.0),
]


def km(a, b):
    (la1, lo1), (la2, lo2) = CITY[a], CITY[b]
    p1, p2 = math.radians(la1), math.radians(la2)
    dp, dl = p2 - p1, math.radians(lo2 - lo1)
    h = math.sin(dp / 2) ** 2 + math.cos(p1) * math.cos(p2) * math.sin(dl / 2) ** 2
    return round(2 * 6371.0 * math.asin(math.sqrt(h)), 1)


def hhmm(hours):
    minutes = int(math.ceil(hours * 60 - 1e-9))
    return f"{minutes // 60}:{minutes % 60:02d}"


def cost(rate):
    return round(rate / CONTAINER_M3, 6)


def service(sid, a, b, mode, dp, hours, cap, rate):
    return (f'  {{ id = "{sid}", from = "{a}", to = "{b}", mode = "{mode}", '
            f'departure_time = "{dp}", travel_time = "{hhmm(hours)}", capacity = {cap}, '
            f'unit_cost = {cost(rate)} }},')


def main():
    hubs = [h for h, _ in HUB_HOURS]
    first = [(o, h) for o in ORIGINS for h in hubs if km(o, h) <= MAX_FIRST_LEG_KM]
    second = [(h, d) for h in hubs for d in DESTINATIONS if km(h, d) <= MAX_SECOND_LEG_KM]
    pairs = sorted(set(first + second + [(o, d) for o in ORIGINS for d in DESTINATIONS]))

    out = []
    w = out.append
    w("# Desk-scale European case study: 5 origin terminals, 13 PI-hubs,")
    w("# 2 destination terminals and 20 PI-containers.")
    w("#")
    w("# Published data: train and truck timetables and capacities on every")
    w("# terminal-hub link, direct-truck capacities, hub operation times and the")
    w("# per-container cost rates (1.2 truck, 0.62 train, 3.78 direct truck per km),")
    w("# stored here divided by the 33 m³ of a twenty-foot container.")
    w("#")
    w("# Synthetic: great-circle distances; speeds of 70 km/h (truck), 60 km/h")
    w("# (train) and 80 km/h (direct truck); hourly direct departures from 06:00;")
    w("# module volumes and counts; arrival at the origin terminals after a")
    w("# direct drive from the Nantes distribution centre, the containers bound")
    w("# for one origin leaving three hours apart; the onward leg to the")
    w("# Moscow distribution centre. Generated by generate_bundled.py.")
    w("")
    w("services = [")
    for a, b in first:
        d = km(a, b)
        for i, (dp, cap) in enumerate(zip(TRAIN_DEPARTURES, TRAIN_CAP_IN)):
            w(service(f"train-{a}-{b}-{i + 1}", a, b, "train", dp, d / TRAIN_KMH, cap, TRAIN_RATE))
        for i, (dp, cap) in enumerate(zip(TRUCK_DEPARTURES, TRUCK_CAP_IN)):
            w(service(f"truck-{a}-{b}-{i + 1}", a, b, "truck", dp, d / TRUCK_KMH, cap, TRUCK_RATE))
    for a, b in second:
        d = km(a, b)
        for i, (dp, cap) in enumerate(zip(TRAIN_DEPARTURES, TRAIN_CAP_OUT)):
            w(service(f"train-{a}-{b}-{i + 1}", a, b, "train", dp, d / TRAIN_KMH, cap, TRAIN_RATE))
        for i, (dp, cap) in enumerate(zip(TRUCK_DEPARTURES, TRUCK_CAP_OUT)):
            w(service(f"truck-{a}-{b}-{i + 1}", a, b, "truck", dp, d / TRUCK_KMH, cap, TRUCK_RATE))
    for o in ORIGINS:
        for dst in DESTINATIONS:
            d = km(o, dst)
            for i, cap in enumerate(DIRECT_CAP):
                w(service(f"direct-{o}-{dst}-{i + 1}", o, dst, "direct-truck", f"{6 + i}:00",
                          d / DIRECT_KMH, cap, DIRECT_RATE))
    w("]")
    w("")
    w("[experiment]")
    w('configuration = "C2"')
    w("samples = 1000")
    w("seed = 2024")
    w("harmonics = 6")
    w('mode = "all"')
    w("")
    w("[experiment.distributions]")
    w("hub_time = { lo = 1.0, hi = 3.0 }")
    w("module_count = { lo = 1, hi = 10 }")
    w('volume_rule = { rule = "iid-volumes", lo = 0.5, hi = 2.0 }')
    w("")
    for o in ORIGINS:
        w("[[nodes]]")
        w(f'id = "{o}"')
        w('kind = "origin-terminal"')
        w("")
    for h, t in HUB_HOURS:
        w("[[nodes]]")
        w(f'id = "{h}"')
        w('kind = "pi-hub"')
        w(f'processing_time = "{t}:00"')
        w("")
    for dst in DESTINATIONS:
        w("[[nodes]]")
        w(f'id = "{dst}"')
        w('kind = "destination-terminal"')
        w(f'onward_time = "{hhmm(km(dst, "moscow") / DIRECT_KMH)}"')
        w("")
    for a, b in pairs:
        w("[[distances]]")
        w(f'from = "{a}"')
        w(f'to = "{b}"')
        w(f"km = {km(a, b)}")
        w("")
    seen = {}
    for n, (o, vols, dests, prio) in enumerate(SHIPMENTS, start=1):
        wave = seen.get(o, 0)
        seen[o] = wave + 1
        w("[[shipments]]")
        w(f'id = "s{n:02d}"')
        if prio != 1.0:
            w(f"priority = {prio}")
        w(f"module_count = {len(vols)}")
        w(f"module_volumes = [{', '.join(str(v) for v in vols)}]")
        w(f'origin_arrivals = {{ {o} = "{hhmm(DISPATCH_GAP * wave + km("nantes", o) / DIRECT_KMH)}" }}')
        w(f"allowed_destinations = [{', '.join(chr(34) + x + chr(34) for x in dests)}]")
        w("")
    print("\n".join(out).rstrip())


if __name__ == "__main__":
    main()
