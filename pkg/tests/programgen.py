"""Seeded generator of small well-typed programs for differential testing.

Every method has the shape `Int m(Int n, Ck p)`; calls are guarded by
`n > 0` and pass `n - 1`, so every run is finite. Bodies mix local and
remote cogs, gets, awaits and synchronous calls, which is enough to
produce both deadlocking and deadlock-free programs.
"""
from __future__ import annotations

import random
from dataclasses import dataclass


@dataclass
class MethodShape:
    name: str
    ptype: str


def _receivers(cls: str, m: MethodShape, objs: list[str], want: str) -> list[str]:
    """Expressions of class `want` that are in scope inside `cls.m`."""
    out = [o for o in objs if o[1:] == want[1:]]
    if cls == want:
        out.append("this")
    if m.ptype == want:
        out.append("p")
    return out


def generate(rng: random.Random, max_classes: int = 3, max_methods: int = 3, max_stmts: int = 6) -> str:
    ncls = rng.randint(1, max_classes)
    classes = [f"C{i}" for i in range(ncls)]
    shapes = {c: [MethodShape(f"m{j}", rng.choice(classes)) for j in range(rng.randint(1, max_methods))]
              for c in classes}
    out = []
    for c in classes:
        out.append(f"class {c} {{")
        for m in shapes[c]:
            out.extend("  " + line for line in _method(rng, c, m, classes, shapes, max_stmts))
        out.append("}")
    out.extend(_main(rng, classes, shapes))
    return "\n".join(out) + "\n"


def _pick(rng, cls, m, live, want, prelude, budget) -> str | None:
    """An expression of class `want`, creating a local object if needed."""
    have = _receivers(cls, m, live, want)
    o = f"o{want[1:]}"
    if have and (o in live or rng.random() < 0.7 or budget[0] <= 0):
        return rng.choice(have)
    if budget[0] <= 0:
        return None
    kind = "new cog" if rng.random() < 0.5 else "new"
    prelude.append(f"{o} = {kind} {want}();")
    budget[0] -= 1
    live.append(o)
    return o


def _call(rng, cls, m, live, classes, shapes, fut, prelude, budget, state) -> tuple[str, str] | None:
    # mostly call "later" methods and recurse at most once per body, so
    # recursion stays mostly linear
    allm = [(c, x) for c in classes for x in shapes[c]]
    here = allm.index((cls, m))
    if rng.random() < 0.1:
        pool = allm
    elif state["recursed"]:
        pool = allm[here + 1:]
    else:
        pool = allm[here:]
    if not pool:
        return None
    target, callee = rng.choice(pool)
    state["recursed"] |= callee is m
    r = _pick(rng, cls, m, live, target, prelude, budget)
    a = _pick(rng, cls, m, live, callee.ptype, prelude, budget) if r else None
    if a is None:
        return None
    if rng.random() < 0.15:
        return f"v = {r}.{callee.name}(n - 1, {a});", ""
    return f"{fut} = {r}!{callee.name}(n - 1, {a});", fut


def _method(rng, cls, m, classes, shapes, max_stmts) -> list[str]:
    budget = [max_stmts - 1]  # the final return
    body: list[str] = []
    live: list[str] = []
    state = {"recursed": False}
    while budget[0] > 0:
        roll = rng.random()
        if roll < 0.8:
            prelude: list[str] = []
            inner: list[str] = []
            futs: list[str] = []
            budget[0] -= 1  # the conditional itself
            for k in range(rng.randint(1, 2)):
                if budget[0] <= 0:
                    break
                c = _call(rng, cls, m, live, classes, shapes, f"f{k}", prelude, budget, state)
                if c is None or budget[0] <= 0:
                    break
                inner.append(c[0])
                budget[0] -= 1
                if c[1]:
                    futs.append(c[1])
            for f in futs:
                how = rng.random()
                if budget[0] <= 0 or how >= 0.8:
                    continue
                if how < 0.45:
                    inner.append(f"v = {f}.get;")
                    budget[0] -= 1
                else:
                    inner.append(f"await {f}?;")
                    budget[0] -= 1
                    if budget[0] > 0 and rng.random() < 0.5:
                        inner.append(f"v = {f}.get;")
                        budget[0] -= 1
            body.extend(prelude)
            if inner:
                body.append("if (n > 0) { " + " ".join(inner) + " }")
            else:
                budget[0] += 1
            continue
        if roll < 0.85:
            body.append("skip;")
            budget[0] -= 1
        else:
            break
    decls = ["Fut<Int> f0;", "Fut<Int> f1;", "Int v;"] + [f"{c} o{i};" for i, c in enumerate(classes)]
    return ([f"Int {m.name}(Int n, {m.ptype} p) {{"] + ["  " + d for d in decls]
            + ["  " + s for s in body] + ["  return n;", "}"])


def _main(rng, classes, shapes) -> list[str]:
    decls = [f"{c} a{i};" for i, c in enumerate(classes)] + ["Fut<Int> g0;", "Fut<Int> g1;", "Int r;"]
    body = [f"a{i} = new cog {c}();" if (i == 0 or rng.random() < 0.6) else f"a{i} = new {c}();"
            for i, c in enumerate(classes)]
    # either one call two levels deep or two shallow ones
    calls = 1 if rng.random() < 0.6 else 2
    for k in range(calls):
        t = rng.randrange(len(classes))
        callee = rng.choice(shapes[classes[t]])
        arg = f"a{classes.index(callee.ptype)}"
        n = rng.randint(1, 2) if calls == 1 else 1
        body.append(f"g{k} = a{t}!{callee.name}({n}, {arg});")
        if rng.random() < 0.6:
            body.append(f"r = g{k}.get;")
    return ["{"] + ["  " + s for s in decls + body] + ["}"]


def programs(seed: int):
    rng = random.Random(seed)
    while True:
        yield generate(rng)
