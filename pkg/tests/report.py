"""Collects one verdict line per acceptance criterion for the terminal summary."""
RESULTS = {}


def record(key, ok, detail):
    RESULTS[key] = f"{key} {'PASS' if ok else 'FAIL'}: {detail}"
    print(RESULTS[key])
    return ok
