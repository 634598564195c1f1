"""Loop-only reference implementations shared by several test modules."""

import math


def oracle_phase(ws, tpw, tsize, thr, tables, inputs, f, writes=None):
    """Loop-only reference for one invocation; tables are lists of [x, y] in slot order
    with a round-robin cursor, distances compared squared.  Writes are appended
    to ``writes`` as (table, lane, slot) when a list is given."""
    per = ws // tpw
    outs, hits = [], []
    for lane in range(ws):
        t = tables[lane // per]
        best, bd = None, None
        for slot, (x, y) in enumerate(t["slots"]):
            d2 = sum((a - b) ** 2 for a, b in zip(x, inputs[lane]))
            if bd is None or d2 < bd:
                best, bd = slot, d2
        if best is not None and bd <= thr * thr:
            outs.append(t["slots"][best][1])
            hits.append(True)
        else:
            outs.append(f(inputs[lane]))
            hits.append(False)
    for ti, t in enumerate(tables):
        best_lane, best_d = None, -1.0
        for lane in range(ti * per, (ti + 1) * per):
            if hits[lane]:
                continue
            ds = [sum((a - b) ** 2 for a, b in zip(x, inputs[lane])) for x, _ in t["slots"]]
            d = min(ds) if ds else math.inf
            if d > best_d:
                best_lane, best_d = lane, d
        if best_lane is None:
            continue
        entry = (tuple(inputs[best_lane]), outs[best_lane])
        if len(t["slots"]) < tsize:
            t["slots"].append(entry)
        else:
            t["slots"][t["cur"]] = entry
        if writes is not None:
            writes.append((ti, best_lane, t["cur"]))
        t["cur"] = (t["cur"] + 1) % tsize
    return outs, hits
