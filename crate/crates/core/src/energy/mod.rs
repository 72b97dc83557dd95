//! Gibbs energies on periodic tessellations.

mod evaluate;
mod intensity;
mod model;

pub use evaluate::{
    change_statistic, configuration_statistic, first_violation, is_removable, local_energy,
    local_energy_of_member, periodic_energy, periodic_statistic, removable_set, statistic_sum,
    violations, EnergyValue, Statistic,
};
pub use intensity::Intensity;
pub use model::{
    Breach, Constraint, HardcoreParams, Interaction, Item, Model, ModelKind, Violation,
    DEFAULT_VOLUME_EXPONENT,
};
