#!/usr/bin/env python3
"""Derive the time-windowed pr01 instance from the published MDVRP pr01 file.

The MDVRP file carries coordinates, service times, demands, depots and the
(D, Q) constraint lines but no time windows. This script keeps all of that
unchanged, stations two vehicles at each depot, and draws a time window for
every customer around its arrival time in a randomly generated reference plan
that respects capacity and route duration. The reference plan therefore has
zero tardiness, which certifies that a zero-tardiness solution exists.

Usage: derive_time_windows.py pr01-mdvrp.txt > pr01.txt
"""
import math
import random
import sys

SEED = 20070401
VEHICLES_PER_DEPOT = 2
DEPOT_WINDOW = (0, 1000)
WIDTH_RANGE = (60, 180)


def read(path):
    tok = open(path).read().split()
    pos = 0

    def nxt():
        nonlocal pos
        pos += 1
        return tok[pos - 1]

    _type, _m, n, t = (int(nxt()) for _ in range(4))
    limits = [(float(nxt()), float(nxt())) for _ in range(t)]
    customers = []
    for _ in range(n):
        cid, x, y, s, q, _f, a = int(nxt()), float(nxt()), float(nxt()), int(nxt()), int(nxt()), nxt(), int(nxt())
        for _ in range(a):
            nxt()
        customers.append(dict(id=cid, x=x, y=y, s=s, q=q))
    depots = []
    for _ in range(t):
        did, x, y, _s, _q, _f, a = int(nxt()), float(nxt()), float(nxt()), nxt(), nxt(), nxt(), int(nxt())
        for _ in range(a):
            nxt()
        depots.append(dict(id=did, x=x, y=y))
    return limits, customers, depots


def dist(a, b):
    return math.hypot(a["x"] - b["x"], a["y"] - b["y"])


def nearest_neighbour(depot, members):
    left, cur, order = list(members), depot, []
    while left:
        nxt = min(left, key=lambda c: dist(cur, c))
        left.remove(nxt)
        order.append(nxt)
        cur = nxt
    return order


def timing(depot, order):
    t, cur, arrivals = 0.0, depot, []
    for c in order:
        t += dist(cur, c)
        arrivals.append(t)
        t += c["s"]
        cur = c
    return arrivals, t + dist(cur, depot)


def main():
    limits, customers, depots = read(sys.argv[1])
    rng = random.Random(SEED)
    vehicles = [(k, d) for k, d in enumerate(depots) for _ in range(VEHICLES_PER_DEPOT)]
    for _attempt in range(100000):
        shuffled = customers[:]
        rng.shuffle(shuffled)
        plans, ok = [], True
        for v, (k, depot) in enumerate(vehicles):
            members = shuffled[v::len(vehicles)]
            duration, capacity = limits[k]
            order = nearest_neighbour(depot, members)
            arrivals, end = timing(depot, order)
            if sum(c["q"] for c in order) > capacity or (duration > 0 and end > duration):
                ok = False
                break
            plans.append((order, arrivals))
        if ok:
            break
    else:
        raise SystemExit("no feasible reference plan")

    windows = {}
    for order, arrivals in plans:
        for c, arr in zip(order, arrivals):
            width = rng.randint(*WIDTH_RANGE)
            open_ = max(0, math.floor(arr - rng.random() * width))
            close = max(open_ + width, math.ceil(arr))
            windows[c["id"]] = (open_, close)

    out = sys.stdout
    out.write(f"6 {VEHICLES_PER_DEPOT} {len(customers)} {len(depots)}\n")
    for d, q in limits:
        out.write(f"{d:g} {q:g}\n")
    for c in customers:
        e, l = windows[c["id"]]
        out.write(f"{c['id']:3d} {c['x']:8.3f} {c['y']:8.3f} {c['s']:2d} {c['q']:2d} 1 1 1 {e:4d} {l:4d}\n")
    for d in depots:
        out.write(f"{d['id']:3d} {d['x']:8.3f} {d['y']:8.3f}  0  0 0 0 {DEPOT_WINDOW[0]:4d} {DEPOT_WINDOW[1]:4d}\n")
    total = 0.0
    for (k, depot), (order, _) in zip(vehicles, plans):
        path = [depot] + order + [depot]
        total += sum(dist(a, b) for a, b in zip(path, path[1:]))
    sys.stderr.write(f"attempts={_attempt + 1} reference_dist={total:.3f}\n")
    for (k, depot), (order, _) in zip(vehicles, plans):
        sys.stderr.write(f"vehicle depot={depot['id']} route={[c['id'] for c in order]}\n")


if __name__ == "__main__":
    main()
