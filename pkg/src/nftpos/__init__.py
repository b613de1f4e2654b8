"""NFT-identity proof-of-stake blockchain engine and throughput simulator."""

from .chain import (
    Block,
    BlockHeader,
    Chain,
    VerifyReport,
    append_block,
    hash_header,
    make_genesis,
    new_chain,
    verify_chain,
)
from .identity import IdentityRegistry, NftIdentity, Session, authenticate, is_registered, mint_identity
from .metrics import MetricsReport, emit_csv, throughput, windowed_report
from .persistence import append_block_to_file, load_chain, store_chain
from .sim import SimConfig, SimResult, StakeSpec, run_simulation, run_sweep
from .stake import (
    ElectionResult,
    StakeLedger,
    apply_reward,
    elect_validator,
    majority_stake_holder,
    record_stake,
)
from .txpool import (
    Mempool,
    Transaction,
    create_transaction,
    deserialize_tx,
    drain_for_block,
    serialize_tx,
    validate_tx,
)

__version__ = "0.1.0"
