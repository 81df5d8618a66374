//! Fixed-architecture feed-forward network with hand-written backprop, an
//! Adam optimizer, experience replay and a periodically synced target copy.

mod adam;
mod mlp;
mod replay;
mod target;

pub use adam::{Adam, AdamConfig};
pub use mlp::{Dense, Gradients, Mlp};
pub use replay::{NotReady, ReplayBuffer};
pub use target::TargetNetworkHandle;

/// Hidden layer widths of the Q-network.
pub const HIDDEN_LAYERS: [usize; 2] = [48, 96];
