//! Replicator vector fields and trajectory integration.

mod flow;
mod integrate;

pub use flow::{
    flow_joint, flow_three_player, flow_two_action, free_flow, logit_field, raw_field_from_logits, FlowParams,
    JointField, StateDerivative,
};
pub(crate) use flow::{field_unchecked, logit_field_slice};
pub use integrate::{integrate, IntegrationControls, Sample, Trajectory};
