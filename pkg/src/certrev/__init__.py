"""Certificate revocation schemes and a cost/request-rate simulator.

Implements CRL variants, hash-chain status directories (single chain and
hierarchical), range-statement hash trees, a 2-3 tree authenticated
dictionary and an OCSP-style responder network behind one harness.
"""

from certrev.model import CertRecord, RevocationState, Verdict

__all__ = ["CertRecord", "RevocationState", "Verdict"]
__version__ = "0.1.0"
