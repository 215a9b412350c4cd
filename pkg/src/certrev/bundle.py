"""Self-contained proof files: a scheme answer plus the signed commitment it verifies against.

A bundle carries everything a relying party needs offline: the CA's
signed commitment (tree root, bulletin, or the hash-chain anchors from the
certificate) and the Directory's answer. Any damage to the file either
breaks decoding, the signature, or the proof itself.
"""

from __future__ import annotations

from dataclasses import dataclass

from certrev import crs, hcrs
from certrev.authdict import tt_verify_bytes
from certrev.codec import Reader, Writer
from certrev.crt import crt_verify_bytes
from certrev.model import Verdict
from certrev.primitives import Signature, sign
from certrev.sim.schemes import World, ca_hash, make_scheme

MAGIC = b"CRVP"
VERSION = 1
PROOF_SCHEMES = ("crt", "nn", "crs", "hcrs")
CRT_SIGNER = "crt-issuer"


@dataclass(frozen=True)
class ProofBundle:
    scheme: str
    issuer: str
    serial: int
    day: int
    width: int
    commitment: bytes
    proof: bytes

    def encode(self) -> bytes:
        return (Writer().raw(MAGIC).u8(VERSION).blob(self.scheme.encode()).blob(self.issuer.encode())
                .u64(self.serial).u32(self.day).u8(self.width)
                .blob(self.commitment).blob(self.proof).getvalue())

    @classmethod
    def decode(cls, data: bytes) -> "ProofBundle":
        r = Reader(data)
        if r.raw(4) != MAGIC:
            raise ValueError("not a proof bundle")
        if r.u8() != VERSION:
            raise ValueError("unsupported bundle version")
        scheme, issuer = r.blob().decode(), r.blob().decode()
        out = cls(scheme, issuer, r.u64(), r.u32(), r.u8(), r.blob(), r.blob())
        r.expect_end()
        return out


def _cert_body(serial: int, *parts: bytes) -> bytes:
    w = Writer().u64(serial)
    for p in parts:
        w.blob(p)
    return w.getvalue()


def make_bundle(scheme_name: str, world: World, serial: int, day: int, *,
                chain_width: str = "paper", serial_bits: int = 20) -> ProofBundle:
    """Replay the scheme's daily updates up to ``day`` and package the answer for ``serial``."""
    if scheme_name not in PROOF_SCHEMES:
        raise ValueError(f"scheme {scheme_name!r} has no proof bundle; choose from {', '.join(PROOF_SCHEMES)}")
    if not 0 <= serial < world.population:
        raise ValueError(f"serial {serial} outside population 0..{world.population - 1}")
    if day < 1:
        raise ValueError("day must be >= 1")
    scheme = make_scheme(scheme_name, world, chain_width=chain_width, serial_bits=serial_bits)
    # the 2-3 tree and the CRS Directory are stateful, so replay every day
    for d in range(1 if scheme_name in ("nn", "crs") else day, day + 1):
        scheme.daily_update(d)
    proof = scheme.answer(serial, day)
    ca = world.ca_of(serial)
    issuer = world.states[ca].issuer
    if scheme_name == "crt":
        tree = scheme.tree
        # the bare root says nothing about when it was current, so sign it with the day
        dated = Writer().u32(day).raw(tree.root).getvalue()
        commitment = Writer().u32(day).blob(tree.root).raw(sign(CRT_SIGNER, dated).encode()).getvalue()
        width = tree.width
    elif scheme_name == "nn":
        b = scheme.trees[ca].bulletin(day, issuer)
        commitment = Writer().u32(b.day).blob(b.root_hash).raw(b.signature.encode()).getvalue()
        width = scheme.width
    elif scheme_name == "crs":
        c = scheme.issued(serial)
        parts = (c.issue_day.to_bytes(4, "big"), c.ext.validity_days.to_bytes(4, "big"),
                 c.ext.y_anchor, c.ext.n_anchor)
        commitment = Writer().u32(c.issue_day).u32(c.ext.validity_days).blob(c.ext.y_anchor) \
            .blob(c.ext.n_anchor).raw(sign(issuer, _cert_body(serial, *parts)).encode()).getvalue()
        width = scheme.width
    else:
        path = scheme.trees[ca].cert_path(scheme.leaf(serial))
        w = Writer().blob(path.leaf.encode()).u8(len(path.path_anchors))
        for a in path.path_anchors:
            w.raw(a)
        anchors = b"".join(path.path_anchors)
        w.raw(sign(issuer, _cert_body(serial, path.leaf.encode(), anchors)).encode())
        commitment = w.getvalue()
        width = scheme.width
    return ProofBundle(scheme_name, issuer, serial, day, width, commitment, proof)


def check_bundle(b: ProofBundle) -> Verdict:
    """Verdict for the bundle; INVALID when the commitment or proof does not check out."""
    try:
        r = Reader(b.commitment)
        if b.scheme == "crt":
            day, root = r.u32(), r.blob()
            sig = Signature.decode(r)
            r.expect_end()
            if day != b.day or len(root) != b.width or not sig.verifies(CRT_SIGNER, Writer().u32(day).raw(root).getvalue()):
                return Verdict.INVALID
            return crt_verify_bytes(root, b.proof, ca_hash(b.issuer), b.serial)
        if b.scheme == "nn":
            day, root = r.u32(), r.blob()
            sig = Signature.decode(r)
            r.expect_end()
            if day != b.day or len(root) != b.width or not sig.verifies(b.issuer, Writer().u32(day).raw(root).getvalue()):
                return Verdict.INVALID
            return tt_verify_bytes(root, b.proof, b.serial)
        if b.scheme == "crs":
            issue_day, D, y, n = r.u32(), r.u32(), r.blob(), r.blob()
            sig = Signature.decode(r)
            r.expect_end()
            parts = (issue_day.to_bytes(4, "big"), D.to_bytes(4, "big"), y, n)
            if len(y) != b.width or not sig.verifies(b.issuer, _cert_body(b.serial, *parts)):
                return Verdict.INVALID
            ans = crs.CrsAnswer.decode(b.proof)
            if ans.serial != b.serial or ans.day != b.day:
                return Verdict.INVALID
            if ans.value is None:
                return Verdict.UNKNOWN
            return crs.crs_verify(crs.CrsCertExtension(y, n, D), ans.value, b.day - issue_day)
        if b.scheme == "hcrs":
            leaf = r.blob().decode()
            anchors = [r.raw(b.width) for _ in range(r.u8())]
            sig = Signature.decode(r)
            r.expect_end()
            if not sig.verifies(b.issuer, _cert_body(b.serial, leaf.encode(), b"".join(anchors))):
                return Verdict.INVALID
            path = hcrs.HcrsCertPath(leaf, anchors)
            pday, ans = hcrs.decode_answer(b.proof, b.width)
            if pday != b.day:
                return Verdict.INVALID
            if ans is None:
                return Verdict.REVOKED
            return hcrs.hcrs_verify(path, ans[0], ans[1], b.day)
    except ValueError:
        return Verdict.INVALID
    return Verdict.INVALID


__all__ = ["PROOF_SCHEMES", "ProofBundle", "check_bundle", "make_bundle"]
