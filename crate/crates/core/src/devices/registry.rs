//! Devices addressable by string id.

use super::{
    classical_copy, echo_signalling, even_round_copier, iid_bell, random_trivial_memory,
    retain_remeasure, Device, Process1Spec,
};
use crate::{Error, Result};

pub const DEVICE_IDS: [&str; 7] = [
    "iid_bell",
    "echo",
    "retain_remeasure",
    "even_copier",
    "classical_copy",
    "bell_product",
    "random_trivial",
];

/// Builds a device. Joint-state devices need the round count up front.
pub fn build(id: &str, rounds: usize) -> Result<Device> {
    Ok(match id {
        "iid_bell" => Device::sequential(iid_bell()),
        "echo" | "echo_signalling" => Device::sequential(echo_signalling()),
        "retain_remeasure" => Device::sequential(retain_remeasure()),
        "even_copier" | "even_round_copier" => Device::sequential(even_round_copier()),
        "classical_copy" => Device::joint(classical_copy(rounds)?),
        "bell_product" => Device::joint(Process1Spec::bell_product(rounds)?),
        "random_trivial" => Device::sequential(random_trivial_memory(0)),
        other => return Err(Error::UnknownDevice(other.to_string())),
    })
}
