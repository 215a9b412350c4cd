"""The two worked examples (revocation tree over three CAs, 16-leaf hierarchical scheme) as text traces."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

from certrev.crt import CrtTree, crt_build_statements, crt_lookup, crt_verify, fold
from certrev.hcrs import ROOT, covered_leaves, excluded_nodes, hcrs_cover, is_leaf, leaf_label, node_name
from certrev.model import Verdict

EXAMPLE_REVOKED = {"CA_1": [156, 343, 344], "CA_2": [], "CA_3": [987]}
EXAMPLE_LEAVES = ("0100", "0101", "1111")


def example_ca_hashes() -> dict[str, bytes]:
    """Three key hashes, relabelled by rank so that CA_1 < CA_2 < CA_3."""
    hs = sorted(hashlib.sha256(f"example-ca-{i}".encode()).digest() for i in range(3))
    return {f"CA_{i + 1}": h for i, h in enumerate(hs)}


def _n(level: int, j: int) -> str:
    return f"N_{{{level},{j}}}"


@dataclass
class CrtDemo:
    tree: CrtTree
    names: dict[bytes, str]
    leaf_index: int
    supporting: list[tuple[int, int]]
    verdict: Verdict
    lines: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.verdict is not Verdict.INVALID

    @property
    def text(self) -> str:
        return "\n".join(self.lines) + "\n"


def crt_demo(extra: dict[str, list[int]] | None = None, query: tuple[str, int] = ("CA_1", 600)) -> CrtDemo:
    revoked = {k: list(v) for k, v in EXAMPLE_REVOKED.items()}
    for ca, serials in (extra or {}).items():
        if ca not in revoked:
            raise ValueError(f"unknown CA {ca!r}; expected one of {', '.join(revoked)}")
        revoked[ca] = sorted(set(revoked[ca]) | set(serials))
    hashes = example_ca_hashes()
    names = {h: n for n, h in hashes.items()}
    statements = crt_build_statements([(hashes[n], revoked[n]) for n in sorted(revoked)])
    tree = CrtTree(statements)
    out = ["certificate revocation tree example", "CA key hashes:"]
    out += [f"  {n} = {h.hex()}" for n, h in hashes.items()]
    out.append(f"statements ({len(statements)}):")
    for j, s in enumerate(statements):
        out.append(f"  {_n(0, j)}  {s.describe(names)}")
    out.append("levels: " + ", ".join(str(len(lv)) for lv in tree.levels))
    for i, lv in enumerate(tree.levels):
        for j, d in enumerate(lv):
            out.append(f"  {_n(i, j)} = {d.hex()}")
    top = len(tree.levels) - 1
    out.append(f"root {_n(top, 0)} = {tree.root.hex()}")

    ca_name, serial = query
    proof = crt_lookup(tree, hashes[ca_name], serial)
    j = proof.leaf_index
    support = tree.supporting_positions(j)
    out.append(f"lookup ({ca_name}, {serial}):")
    out.append(f"  statement {_n(0, j)}: {proof.statement.describe(names)}")
    out.append("  supporting nodes: " + ", ".join(_n(a, b) for a, b in support))
    out.append("fold:")
    folded = fold(proof, tree.width)
    if folded is not None:
        idx = j
        for level, (_, h) in enumerate(zip(proof.co_path, folded[2][1:])):
            sib = idx ^ 1
            if sib >= len(tree.levels[level]):
                expr = f"H({_n(level, idx)})"
            elif sib < idx:
                expr = f"H({_n(level, sib)}|{_n(level, idx)})"
            else:
                expr = f"H({_n(level, idx)}|{_n(level, sib)})"
            idx >>= 1
            out.append(f"  {_n(level + 1, idx)} = {expr} = {h.hex()}")
    verdict = crt_verify(tree.root, proof, hashes[ca_name], serial)
    out.append(f"verdict: {verdict.value}")
    out.append("verification: " + ("ok" if verdict is not Verdict.INVALID else "FAILED"))
    return CrtDemo(tree, names, j, support, verdict, out)


@dataclass
class HcrsDemo:
    depth: int
    revoked: set[str]
    excluded: set[str]
    cover: set[str]
    condition_cover: bool
    condition_parent: bool
    lines: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.condition_cover and self.condition_parent

    @property
    def text(self) -> str:
        return "\n".join(self.lines) + "\n"


def deepest_first(node: str) -> tuple[int, str]:
    return -len(node), node


def parse_revoked(spec: str, depth: int) -> set[str]:
    """Comma/space separated leaf labels, or ``all``."""
    spec = spec.strip()
    if spec == "all":
        return {leaf_label(i, depth) for i in range(1 << depth)}
    out = set()
    for tok in spec.replace(",", " ").split():
        if not is_leaf(tok, depth):
            raise ValueError(f"{tok!r} is not a {depth}-bit leaf label")
        out.add(tok)
    return out


def hcrs_demo(revoked: set[str] | None = None, depth: int = 4) -> HcrsDemo:
    revoked = set(EXAMPLE_LEAVES) if revoked is None else set(revoked)
    cover = hcrs_cover(depth, revoked)
    excluded = excluded_nodes(depth, revoked)
    leaves = {leaf_label(i, depth) for i in range(1 << depth)}
    cond_cover = covered_leaves(depth, cover) == leaves - revoked
    # a verification node is clean and its parent is not (the root has no parent)
    cond_parent = all(n not in excluded and n not in revoked and (n == ROOT or n[:-1] in excluded)
                      for n in cover)

    def fmt(nodes, key=None) -> str:
        return "{" + ", ".join(node_name(n) for n in sorted(nodes, key=key)) + "}"

    out = [f"hierarchical revocation example: {len(leaves)} leaves (depth {depth})"]
    for d in range(depth + 1):
        row = []
        for k in range(1 << d):
            n = leaf_label(k, d) if d else ROOT
            mark = "[r]" if n in revoked else "[x]" if n in excluded else "(v)" if n in cover else ""
            row.append(f"{node_name(n)}{mark}".ljust(depth + 4))
        out.append(("  " + " ".join(row)).rstrip())
    out.append("legend: [r] revoked leaf, [x] excluded node, (v) verification node")
    out.append(f"revoked: {fmt(revoked)}")
    out.append(f"excluded nodes: {fmt(excluded, key=deepest_first)}")
    out.append(f"cover ({len(cover)}): {fmt(cover)}")
    out.append("condition 1, cover spans exactly the non-revoked leaves: " + ("ok" if cond_cover else "FAILED"))
    out.append("condition 2, every cover node has an excluded parent: " + ("ok" if cond_parent else "FAILED"))
    return HcrsDemo(depth, revoked, excluded, cover, cond_cover, cond_parent, out)


__all__ = ["CrtDemo", "HcrsDemo", "crt_demo", "hcrs_demo", "example_ca_hashes", "parse_revoked"]
