"""Injective renaming of every cog name in a solved program."""
from __future__ import annotations

import random

from cogcheck.contract_core import (
    START, MethodContract, contract_cogs, contract_map, record_cogs, subst_record,
)
from cogcheck.inference import SolvedProgram


def cog_names(solved: SolvedProgram) -> list[str]:
    out: list[str] = []
    for mc in solved.cct.values():
        for r in (mc.recv, *mc.args, mc.ret):
            out += record_cogs(r)
        out += contract_cogs(mc.sync) + contract_cogs(mc.unsync)
    out += contract_cogs(solved.main[0]) + contract_cogs(solved.main[1])
    return sorted({n for n in out if n != START})


def random_injection(names: list[str], rng: random.Random) -> dict:
    image = [f"q{i}" for i in range(len(names) * 3)]
    rng.shuffle(image)
    return dict(zip(names, image))


def rename(solved: SolvedProgram, k: dict) -> SolvedProgram:
    def mc_(mc: MethodContract) -> MethodContract:
        return MethodContract(mc.cls, mc.meth, subst_record(mc.recv, k), tuple(subst_record(a, k) for a in mc.args),
                              contract_map(mc.sync, k), contract_map(mc.unsync, k), subst_record(mc.ret, k))

    cct = {key: mc_(mc) for key, mc in solved.cct.items()}
    main = (contract_map(solved.main[0], k), contract_map(solved.main[1], k))
    return SolvedProgram(cct, main, solved.result, list(solved.warnings), {})
