//! Shared fixtures for the criterion benchmarks.

use racsim_core::concat::{build_tree, ConcatTree};
use racsim_core::mzi::{protocol_settings, AliceReadout, Sampler};
use racsim_core::qrac::default_bases;
use racsim_core::{PureState, Result};

/// Sampler over the four default 2-bit protocol settings on the singlet.
pub fn protocol_sampler(seed: u64) -> Result<Sampler> {
    let settings = protocol_settings(&default_bases(2)?, AliceReadout::Steered)?;
    Sampler::new(&PureState::path_spin_singlet(), &settings, seed)
}

/// Balanced tree with an alternating input string.
pub fn concat_fixture(n: usize) -> Result<(ConcatTree, Vec<u8>)> {
    let tree = build_tree(n)?;
    let input = (0..n).map(|k| (k % 2) as u8).collect();
    Ok((tree, input))
}
