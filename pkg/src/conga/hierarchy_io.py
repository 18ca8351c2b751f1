"""Text forms of hierarchies and their level certificates.

Hierarchy file::

    hierarchy <n> <L>
    level 1
    <vertex ids of one cluster, space separated>
    ...
    level 2
    ...

Certificate file (one block per consecutive level pair, zero flows omitted)::

    certificates <n> <m> <L-1> <alpha>
    level <i> <beta> <nonzero count>
    <edge id> <flow value>
    ...

Lines starting with '#' and blank lines are ignored.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import InputError, Partition


def _lines(text: str):
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if line and not line.startswith("#"):
            yield no, line.split()


def write_hierarchy_text(levels) -> str:
    levels = list(levels)
    n = levels[0].n if levels else 0
    out = [f"hierarchy {n} {len(levels)}"]
    for i, P in enumerate(levels, 1):
        out.append(f"level {i}")
        out.extend(" ".join(map(str, c)) for c in P.clusters())
    return "\n".join(out) + "\n"


def read_hierarchy_text(text: str) -> list[Partition]:
    it = _lines(text)
    try:
        no, head = next(it)
    except StopIteration:
        raise InputError("empty hierarchy file") from None
    if len(head) != 3 or head[0] != "hierarchy":
        raise InputError(f"line {no}: expected 'hierarchy <n> <L>'")
    try:
        n, L = int(head[1]), int(head[2])
    except ValueError:
        raise InputError(f"line {no}: bad header numbers") from None
    groups: list[list[list[int]]] = []
    for no, tok in it:
        if tok[0] == "level":
            if len(tok) != 2 or tok[1] != str(len(groups) + 1):
                raise InputError(f"line {no}: expected 'level {len(groups) + 1}'")
            groups.append([])
            continue
        if not groups:
            raise InputError(f"line {no}: cluster before the first level line")
        try:
            groups[-1].append([int(x) for x in tok])
        except ValueError:
            raise InputError(f"line {no}: vertex ids must be integers") from None
    if len(groups) != L:
        raise InputError(f"header promises {L} levels, file has {len(groups)}")
    levels = []
    for i, clusters in enumerate(groups, 1):
        try:
            levels.append(Partition.from_clusters(n, clusters))
        except InputError as exc:
            raise InputError(f"level {i}: {exc}") from None
    return levels


@dataclass
class CertificateSet:
    n: int
    m: int
    alpha: float
    betas: list[float]
    flows: list[np.ndarray]


def write_certificates_text(hierarchy) -> str:
    g = hierarchy.g
    out = [f"certificates {g.n} {g.m} {len(hierarchy.certificates)} {float(hierarchy.alpha)!r}"]
    for i, cert in enumerate(hierarchy.certificates, 1):
        nz = np.flatnonzero(cert.flow)
        out.append(f"level {i} {float(cert.beta)!r} {nz.size}")
        out.extend(f"{e} {float(cert.flow[e])!r}" for e in nz.tolist())
    return "\n".join(out) + "\n"


def read_certificates_text(text: str) -> CertificateSet:
    rows = list(_lines(text))
    if not rows or rows[0][1][0] != "certificates" or len(rows[0][1]) != 5:
        raise InputError("expected 'certificates <n> <m> <count> <alpha>' header")
    try:
        n, m, k = (int(x) for x in rows[0][1][1:4])
        alpha = float(rows[0][1][4])
    except ValueError:
        raise InputError("bad certificate header numbers") from None
    betas, flows = [], []
    pos = 1
    for i in range(1, k + 1):
        if pos >= len(rows):
            raise InputError(f"missing certificate block {i}")
        no, tok = rows[pos]
        if len(tok) != 4 or tok[0] != "level" or tok[1] != str(i):
            raise InputError(f"line {no}: expected 'level {i} <beta> <count>'")
        try:
            beta, cnt = float(tok[2]), int(tok[3])
        except ValueError:
            raise InputError(f"line {no}: bad level numbers") from None
        f = np.zeros(m)
        for no, tok in rows[pos + 1:pos + 1 + cnt]:
            if len(tok) != 2:
                raise InputError(f"line {no}: expected '<edge> <value>'")
            try:
                e, val = int(tok[0]), float(tok[1])
            except ValueError:
                raise InputError(f"line {no}: bad edge flow entry") from None
            if not 0 <= e < m:
                raise InputError(f"line {no}: edge id {e} out of range")
            f[e] = val
        if pos + 1 + cnt > len(rows):
            raise InputError(f"certificate block {i} is truncated")
        pos += 1 + cnt
        betas.append(beta)
        flows.append(f)
    if pos != len(rows):
        raise InputError(f"line {rows[pos][0]}: trailing content")
    return CertificateSet(n, m, alpha, betas, flows)


def certificates_of(hierarchy) -> CertificateSet:
    g = hierarchy.g
    return CertificateSet(
        g.n, g.m, hierarchy.alpha, [c.beta for c in hierarchy.certificates], [c.flow for c in hierarchy.certificates]
    )
