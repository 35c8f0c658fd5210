"""Independent reference computations used to freeze expected values in tests.

Nothing here calls into the solver code paths it checks.
"""
import itertools
import math
import random


def wdp_brute_force(gt, vt):
    """Best value over all 2^bm selections of pairwise-disjoint bundles."""
    best, best_x = 0.0, (False,) * len(gt)
    for r in range(len(gt) + 1):
        for combo in itertools.combinations(range(len(gt)), r):
            used = set()
            ok = True
            for i in combo:
                if used & set(gt[i]):
                    ok = False
                    break
                used |= set(gt[i])
            if ok:
                val = sum(vt[i] for i in combo)
                if val > best + 1e-12:
                    best = val
                    best_x = tuple(i in combo for i in range(len(gt)))
    return best, best_x


def random_wdp(rng: random.Random, max_bids=15, max_tasks=20, max_size=4):
    n_tasks = rng.randint(1, max_tasks)
    bm = rng.randint(0, max_bids)
    gt, vt = [], []
    for _ in range(bm):
        size = rng.randint(1, min(max_size, n_tasks))
        gt.append(frozenset(f"t{j}" for j in rng.sample(range(n_tasks), size)))
        vt.append(round(rng.uniform(0.05, 1.0) * size, 4))
    return gt, vt


def route_timing(start_pos, start_time, seq, speed, clock=0):
    """Earliest-start timing of a route; None if a window is missed."""
    pos, t = start_pos, start_time
    out = []
    for tk in seq:
        leg = math.dist(pos, tk.location)
        travel = 0 if leg <= 0 else math.ceil(leg / speed * 3600 - 1e-9)
        s = max(tk.window_start, t + travel, clock)
        e = s + tk.required_duration
        if e > tk.window_end:
            return None
        out.append((tk.id, s, e, leg))
        pos, t = tk.location, e
    return out


def best_insertion(home, schedule, new, speed, mileage_left):
    """Exhaustive check of every insertion position for a mobile resource
    whose whole schedule is pending. Returns (position, added_km) or None."""
    best = None
    base_len = _length(home, schedule)
    for i in range(len(schedule) + 1):
        seq = schedule[:i] + [new] + schedule[i:]
        added = _length(home, seq) - base_len
        if added > mileage_left + 1e-9:
            continue
        if route_timing(home, 0, seq, speed) is None:
            continue
        if best is None or added < best[1] - 1e-12:
            best = (i, added)
    return best


def _length(home, seq):
    pos, total = home, 0.0
    for tk in seq:
        total += math.dist(pos, tk.location)
        pos = tk.location
    return total


def consumption_ref(d_ratio, r_ratio, c_ratio, a=1 / 3, b=1 / 3, g=1 / 3):
    if max(d_ratio, r_ratio, c_ratio) > 1:
        return 1.0
    return (a * d_ratio + b * r_ratio + g * c_ratio) ** 2


def price_ref(pairs, l1=0.5, l2=0.5):
    return sum(l1 * (1 - g) + l2 * (1 - f) for g, f in pairs)


def point_line_distance(p, origin, direction):
    # Projection residual, written differently from the library's cross product.
    vx, vy = p[0] - origin[0], p[1] - origin[1]
    along = vx * direction[0] + vy * direction[1]
    return math.sqrt(max(vx * vx + vy * vy - along * along, 0.0))
