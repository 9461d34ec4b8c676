"""Random small tight programs for differential testing."""

from __future__ import annotations

import random

from aggrprop.grounder import ground_program
from aggrprop.oracle import possible_atoms
from aggrprop.parser import parse

VARS = ("X", "Y", "Z")
OPS = (">=", ">", "<=", "<", "=")


def _atom(rng, pred, arity, pool, consts):
    terms = [rng.choice(pool) if pool and rng.random() < 0.8 else str(rng.choice(consts))
             for _ in range(arity)]
    return f"{pred}({','.join(terms)})" if terms else pred


def _vars_of(text):
    return {c for c in text if c in VARS}


def random_program_text(rng: random.Random, n_consts=None, n_preds=None,
                        max_constraints=2) -> str:
    k = n_consts or rng.randint(1, 3)
    consts = list(range(1, k + 1))
    m = n_preds or rng.randint(2, 6)
    preds = [(f"p{i}", rng.choice((0, 1, 1, 2))) for i in range(m)]
    lines = []
    # base facts and guesses on the first predicates
    for name, ar in preds[:2]:
        for _ in range(rng.randint(1, 3)):
            atom = _atom(rng, name, ar, (), consts)
            if rng.random() < 0.5:
                lines.append(f"{{{atom}}}.")
            else:
                lines.append(f"{atom}.")
    # rules: heads only depend positively on earlier predicates
    for i in range(1, m):
        name, ar = preds[i]
        for _ in range(rng.randint(0, 3)):
            src_name, src_ar = rng.choice(preds[:i])
            body = [_atom(rng, src_name, src_ar, VARS[:2], consts)]
            bound = _vars_of(body[0])
            if rng.random() < 0.4:
                nname, nar = rng.choice(preds)
                neg = _atom(rng, nname, nar, sorted(bound), consts)
                if _vars_of(neg) <= bound:
                    body.append(f"not {neg}")
            head = _atom(rng, name, ar, sorted(bound), consts)
            if not _vars_of(head) <= bound:
                continue
            if rng.random() < 0.35:
                lines.append(f"{{{head}}} :- {', '.join(body)}.")
            else:
                lines.append(f"{head} :- {', '.join(body)}.")
    # constraints, mostly with an aggregate
    for _ in range(rng.randint(1, max_constraints)):
        body = []
        bound: set = set()
        for _ in range(rng.randint(0, 2)):
            name, ar = rng.choice(preds)
            lit = _atom(rng, name, ar, VARS[:2], consts)
            body.append(lit)
            bound |= _vars_of(lit)
        if body and rng.random() < 0.3:
            name, ar = rng.choice(preds)
            neg = _atom(rng, name, ar, sorted(bound), consts)
            if _vars_of(neg) <= bound:
                body.append(f"not {neg}")
        if rng.random() < 0.85 or not body:
            fn = rng.choice(("count", "sum"))
            elems = []
            for _ in range(rng.randint(1, 2)):
                conj = []
                for _ in range(rng.choice((1, 1, 2))):
                    name, ar = rng.choice(preds)
                    conj.append(_atom(rng, name, ar, VARS, consts))
                cv = set().union(*(_vars_of(c) for c in conj))
                usable = sorted(cv | bound)
                if usable and rng.random() < 0.8:
                    first = rng.choice(usable)
                else:
                    first = str(rng.choice(consts))
                terms = [first] + ([rng.choice(usable)] if usable and rng.random() < 0.3 else [])
                elems.append(f"{','.join(terms)}: {', '.join(conj)}")
            if bound and rng.random() < 0.2:
                guard = rng.choice(sorted(bound))
            else:
                guard = str(rng.randint(0, 3))
            body.append(f"#{fn}{{{'; '.join(elems)}}} {rng.choice(OPS)} {guard}")
        lines.append(f":- {', '.join(body)}.")
    return "\n".join(lines) + "\n"


def random_program(rng: random.Random, atom_cap=14, min_atoms=4, **kw):
    """A parsed random program with between ``min_atoms`` and ``atom_cap``
    derivable atoms."""
    while True:
        text = random_program_text(rng, **kw)
        try:
            prog = parse(text)
        except Exception:
            continue
        gp = ground_program(prog, cap=None)
        if min_atoms <= len(possible_atoms(r for r in gp.rules if r.head)) <= atom_cap:
            return prog


def guess_program_text(rng: random.Random) -> str:
    """A guess over a few atoms plus one aggregate constraint; propagators
    fire often on these."""
    k = rng.randint(2, 3)
    lines = [f"q({i})." for i in range(1, k + 1)]
    if rng.random() < 0.5:
        lines.append("{b(X,1)} :- q(X).")
        lines.append(f"{{b(X,{k})}} :- q(X).")
    else:
        lines.append("{b(X,X)} :- q(X).")
        lines.append("{b(1,X)} :- q(X).")
    lines.append("{d(X)} :- q(X).")
    body = rng.choice(["q(X)", "d(X)", "q(X), not d(X)", "d(X), q(Z)", ""])
    fn = rng.choice(("count", "sum"))
    elem = rng.choice(["Y: b(X,Y)", "Y: b(Y,X)", "Y: b(X,Y), d(Y)", "Y: b(X,Y); 2: d(X)",
                       "Y,W: b(W,Y)"])
    if not body:
        elem = elem.replace("X", "W") if "W" not in elem else elem.replace("X", "V")
    guard = rng.randint(0, 3)
    op = rng.choice(OPS)
    sep = ", " if body else ""
    lines.append(f":- {body}{sep}#{fn}{{{elem}}} {op} {guard}.")
    return "\n".join(lines) + "\n"


def guess_program(rng: random.Random, atom_cap=12):
    while True:
        prog = parse(guess_program_text(rng))
        gp = ground_program(prog, cap=None)
        if len(possible_atoms(r for r in gp.rules if r.head)) <= atom_cap:
            return prog
