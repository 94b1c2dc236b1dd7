"""Shared generators for randomized tests."""
import random

from powerlag import expr as ex

SMOOTH_FUNCS = ("sin", "cos", "exp", "tanh")

# one summary line per acceptance criterion, printed at the end of the run
ACCEPTANCE_LINES = []


def random_expr(rng: random.Random, depth: int, symbols, *, raw=True, smooth=False,
                const_range=(-3.0, 3.0)):
    """Random AST of depth <= ``depth`` over ``symbols``.

    ``raw`` keeps the tree unsimplified. ``smooth`` restricts to operations
    that are differentiable and defined everywhere (no division, log, sqrt,
    abs, sgn, fractional powers).
    """
    mk_add = ex.raw_add if raw else ex.add
    mk_mul = ex.raw_mul if raw else ex.mul
    mk_pow = ex.raw_pow if raw else ex.power
    mk_neg = ex.raw_neg if raw else ex.neg
    mk_div = ex.raw_div if raw else ex.div
    mk_func = ex.raw_func if raw else ex.func

    def leaf():
        if rng.random() < 0.35:
            value = rng.choice([0.0, 1.0, 2.0, -1.0, 0.5, round(rng.uniform(*const_range), 3)])
            return ex.const(value)
        return rng.choice(symbols)

    def build(d):
        if d <= 0 or rng.random() < 0.2:
            return leaf()
        ops = ["add", "mul", "pow", "neg", "func"] + ([] if smooth else ["div"])
        op = rng.choice(ops)
        if op == "add":
            return mk_add(*(build(d - 1) for _ in range(rng.randint(2, 3))))
        if op == "mul":
            return mk_mul(*(build(d - 1) for _ in range(rng.randint(2, 3))))
        if op == "pow":
            exponent = rng.choice([2.0, 3.0]) if smooth else rng.choice([2.0, 3.0, -1.0, 0.5, -0.5, 1.5])
            return mk_pow(build(d - 1), exponent)
        if op == "neg":
            return mk_neg(build(d - 1))
        if op == "div":
            return mk_div(build(d - 1), build(d - 1))
        names = SMOOTH_FUNCS if smooth else ex.FUNCTIONS
        return mk_func(rng.choice(names), build(d - 1))

    return build(depth)


def rel_close(a, b, tol):
    return abs(a - b) <= tol * max(1.0, abs(a), abs(b))


def mp_evaluate(e, binding, dps=50):
    """High-precision reference evaluation with mpmath (real results only)."""
    import mpmath

    with mpmath.workdps(dps):
        memo = {}

        def walk(node):
            hit = memo.get(node)
            if hit is not None:
                return hit
            if isinstance(node, ex.Const):
                out = mpmath.mpf(node.value)
            elif isinstance(node, ex.Sym):
                out = mpmath.mpf(binding[node])
            elif isinstance(node, ex.Add):
                out = mpmath.fsum(walk(a) for a in node.args)
            elif isinstance(node, ex.Mul):
                out = mpmath.mpf(1)
                for a in node.args:
                    out *= walk(a)
            elif isinstance(node, ex.Neg):
                out = -walk(node.arg)
            elif isinstance(node, ex.Div):
                out = walk(node.num) / walk(node.den)
            elif isinstance(node, ex.Pow):
                out = mpmath.power(walk(node.base), mpmath.mpf(node.exponent))
            else:
                x = walk(node.arg)
                if node.name == "sgn":
                    out = mpmath.mpf(mpmath.sign(x))
                elif node.name == "abs":
                    out = abs(x)
                else:
                    out = getattr(mpmath, node.name)(x)
            memo[node] = out
            return out

        return float(walk(e))
