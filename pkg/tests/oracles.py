"""Independent brute-force oracles used by several test modules."""

from peplogic.qbf import QbfProblem


def brute(q: QbfProblem) -> bool:
    """Truth of a CNF QBF by enumerating the whole prefix."""
    order = [(k, v) for k, vs in q.prefix for v in vs]
    bound = {v for _, v in order}
    free = sorted({abs(l) for c in q.cnf for l in c} - bound)
    order = [("e", v) for v in free] + order

    def go(i, env):
        if i == len(order):
            return all(any(env[abs(l)] == (l > 0) for l in c) for c in q.cnf)
        k, v = order[i]
        vals = (go(i + 1, {**env, v: b}) for b in (False, True))
        return any(vals) if k == "e" else all(vals)

    return go(0, {})


def circuit_truth(q: QbfProblem) -> bool:
    order = [(k, v) for k, vs in q.prefix for v in vs]

    def go(i, env):
        if i == len(order):
            return q.circuit.evaluate(q.root, env)
        k, v = order[i]
        vals = (go(i + 1, {**env, v: b}) for b in (False, True))
        return any(vals) if k == "e" else all(vals)

    return go(0, {})
