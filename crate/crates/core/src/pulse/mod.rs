//! Bayesian population-size samplers.

mod chain;
pub mod logspace;
mod moment;
pub mod oracle;
mod posterior;
mod prior;
mod proposal;
mod state;

pub use chain::{
    default_window, run_chain_er, run_chain_sbm, AllocationUpdate, ChainConfig, ChainTrace,
    ChainWarning, ProposalRatio,
};
pub use moment::{moment_existence, MomentCheck};
pub use oracle::{compositions, marginal_likelihood_oracle, MarginalLikelihood};
pub use posterior::{log_joint_posterior_sbm, log_posterior_er};
pub use prior::{default_ntilde_max, MatrixOrScalar, PriorConfig, PriorSpec};
pub use proposal::{
    avail, count_log_proposal_ratio, count_window, draw_pendant_move, propose_block_count,
    propose_pendant_move, PendantMove,
};
pub use state::{init_state, LatentState};
