#!/usr/bin/env python3
"""
Signatures and identities.
Keyed-digest signatures sized by the digest algorithm, and the identity
directory that stands in for the public key infrastructure.
"""

import logging
from dataclasses import dataclass
from enum import Enum

import numpy as np
from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives import hashes, hmac

logger = logging.getLogger(__name__)

NodeId = int

MAX_NODE_ID = 2**64 - 1
KEY_BYTES = 32


class CryptoError(ValueError):
    """Raised when signing inputs are invalid."""


class DuplicateIdentityError(CryptoError):
    """Raised when a node tries to register a second identity."""


class DigestAlgo(str, Enum):
    """Digest algorithm classes, distinguished by output size."""

    MD5 = "md5"
    SHA1 = "sha1"
    SHA256 = "sha256"

    @property
    def digest_size(self) -> int:
        return _DIGEST_SIZES[self]

    @property
    def label(self) -> str:
        return _LABELS[self]

    @property
    def code(self) -> int:
        """One-byte wire code."""
        return _CODES[self]

    @classmethod
    def from_code(cls, code: int) -> "DigestAlgo":
        for algo, algo_code in _CODES.items():
            if algo_code == code:
                return algo
        raise CryptoError(f"unknown digest code {code}")

    @classmethod
    def for_size(cls, size: int) -> "DigestAlgo":
        for algo, algo_size in _DIGEST_SIZES.items():
            if algo_size == size:
                return algo
        raise CryptoError(f"no digest algorithm produces {size}-byte signatures")

    def hash_algorithm(self) -> hashes.HashAlgorithm:
        if self is DigestAlgo.MD5:
            return hashes.MD5()
        if self is DigestAlgo.SHA1:
            return hashes.SHA1()
        return hashes.SHA256()


_DIGEST_SIZES = {DigestAlgo.MD5: 16, DigestAlgo.SHA1: 20, DigestAlgo.SHA256: 32}
_LABELS = {DigestAlgo.MD5: "MD5", DigestAlgo.SHA1: "SHA-1", DigestAlgo.SHA256: "SHA-256"}
_CODES = {DigestAlgo.MD5: 1, DigestAlgo.SHA1: 2, DigestAlgo.SHA256: 3}


class SignatureStatus(str, Enum):
    """Result of checking one signature against the directory."""

    VALID = "valid"
    INVALID = "invalid"
    UNKNOWN_SIGNER = "unknown_signer"


@dataclass(frozen=True)
class KeyPair:
    """Signing material of one node."""

    node: NodeId
    signing_key: bytes
    verifying_key: bytes

    def __repr__(self):
        return f"KeyPair(node={self.node}, signing_key=<hidden>)"


@dataclass(frozen=True)
class Signature:
    """A signature value attributed to its signer."""

    signer: NodeId
    value: bytes


def generate_keypair(node: NodeId, rng: np.random.Generator) -> KeyPair:
    """
    Generate key material for a node from a seeded generator.

    In the keyed-digest model the directory keeps the verification secret,
    so both halves carry the same bytes.
    """
    if not 0 <= node <= MAX_NODE_ID:
        raise CryptoError(f"node id {node} does not fit in 8 bytes")
    secret = rng.bytes(KEY_BYTES)
    return KeyPair(node=node, signing_key=secret, verifying_key=secret)


def _mac(key: bytes, message: bytes, algo: DigestAlgo) -> hmac.HMAC:
    mac = hmac.HMAC(key, algo.hash_algorithm())
    mac.update(message)
    return mac


def sign(key: KeyPair, message: bytes, algo: DigestAlgo) -> Signature:
    """
    Sign a message.

    Args:
        key: Signer key pair
        message: Non-empty message bytes
        algo: Digest algorithm; fixes the signature length

    Returns:
        Signature of exactly algo.digest_size bytes
    """
    if not message:
        raise CryptoError("cannot sign an empty message")
    value = _mac(key.signing_key, message, algo).finalize()
    return Signature(signer=key.node, value=value)


class Directory:
    """
    Identity registry mapping node ids to verification keys.

    One identity per node; registration is a setup step and lookups are
    read-only afterwards.
    """

    def __init__(self):
        self._keys: dict[NodeId, bytes] = {}

    def register(self, key: KeyPair) -> None:
        if key.node in self._keys:
            raise DuplicateIdentityError(f"node {key.node} already has an identity")
        if not 0 <= key.node <= MAX_NODE_ID:
            raise CryptoError(f"node id {key.node} does not fit in 8 bytes")
        self._keys[key.node] = key.verifying_key

    def lookup(self, node: NodeId) -> bytes | None:
        return self._keys.get(node)

    def __contains__(self, node: object) -> bool:
        return node in self._keys

    def __len__(self) -> int:
        return len(self._keys)


def check_signature(
    directory: Directory, sig: Signature, message: bytes, algo: DigestAlgo
) -> SignatureStatus:
    """Check a signature and say why it failed, if it did."""
    verifying_key = directory.lookup(sig.signer)
    if verifying_key is None:
        logger.debug("signature from unknown identity %s", sig.signer)
        return SignatureStatus.UNKNOWN_SIGNER
    if len(sig.value) != algo.digest_size or not message:
        return SignatureStatus.INVALID
    try:
        _mac(verifying_key, message, algo).verify(sig.value)
    except InvalidSignature:
        return SignatureStatus.INVALID
    return SignatureStatus.VALID


def verify(directory: Directory, sig: Signature, message: bytes, algo: DigestAlgo) -> bool:
    """True iff the signature was made by the registered signer over message."""
    return check_signature(directory, sig, message, algo) is SignatureStatus.VALID
