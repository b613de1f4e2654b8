"""NFT identities: one sequentially numbered token per user, used as the login name.

The secret never leaves the caller; the registry keeps only its SHA-256
commitment. Authentication hands back a :class:`Session` whose token binds
the NFT id, the commitment and the login time.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass, field

from .errors import BadCredential, EmptySecret, LabelTooLong, UnknownNft

MAX_LABEL_BYTES = 64
MAX_NFT_ID = 2**64 - 1


@dataclass(frozen=True)
class NftIdentity:
    nft_id: int
    owner_label: str
    credential_commitment: bytes


@dataclass(frozen=True)
class Session:
    nft_id: int
    issued_at_ms: int
    session_token: bytes


def commit_secret(secret: bytes) -> bytes:
    return hashlib.sha256(secret).digest()


def session_token(nft_id: int, commitment: bytes, issued_at_ms: int) -> bytes:
    return hashlib.sha256(struct.pack(">Q", nft_id) + commitment + struct.pack(">Q", issued_at_ms)).digest()


@dataclass
class IdentityRegistry:
    """Append-only map of nft_id to identity. Ids start at 1; 0 is reserved."""

    identities: dict[int, NftIdentity] = field(default_factory=dict)
    next_id: int = 1

    def mint(self, owner_label: str, secret: bytes) -> NftIdentity:
        if not secret:
            raise EmptySecret("secret must be non-empty")
        if len(owner_label.encode("utf-8")) > MAX_LABEL_BYTES:
            raise LabelTooLong(f"owner label exceeds {MAX_LABEL_BYTES} UTF-8 bytes")
        if self.next_id > MAX_NFT_ID:
            raise OverflowError("nft id space exhausted")
        identity = NftIdentity(self.next_id, owner_label, commit_secret(bytes(secret)))
        self.identities[identity.nft_id] = identity
        self.next_id += 1
        return identity

    def authenticate(self, nft_id: int, secret: bytes, now_ms: int) -> Session:
        identity = self.identities.get(nft_id)
        if identity is None:
            raise UnknownNft()
        if commit_secret(bytes(secret)) != identity.credential_commitment:
            raise BadCredential()
        return Session(nft_id, now_ms, session_token(nft_id, identity.credential_commitment, now_ms))

    def is_registered(self, nft_id: int) -> bool:
        return nft_id in self.identities

    def commitment(self, nft_id: int) -> bytes | None:
        identity = self.identities.get(nft_id)
        return identity.credential_commitment if identity else None

    def session_is_valid(self, session: Session) -> bool:
        commitment = self.commitment(session.nft_id)
        if commitment is None:
            return False
        return session.session_token == session_token(session.nft_id, commitment, session.issued_at_ms)

    def __len__(self) -> int:
        return len(self.identities)

    def __contains__(self, nft_id: int) -> bool:
        return nft_id in self.identities


# Functional spellings. The registry is single-writer and updated in place,
# so these return the same registry object they were given.

def mint_identity(registry: IdentityRegistry, owner_label: str, secret: bytes):
    identity = registry.mint(owner_label, secret)
    return registry, identity


def authenticate(registry: IdentityRegistry, nft_id: int, secret: bytes, now_ms: int) -> Session:
    return registry.authenticate(nft_id, secret, now_ms)


def is_registered(registry: IdentityRegistry, nft_id: int) -> bool:
    return registry.is_registered(nft_id)
