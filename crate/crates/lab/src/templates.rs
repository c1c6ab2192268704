//! Prompt templates for the lab queries.

use cogtown_core::backend::{Gateway, TemplateSet};

macro_rules! lab_templates {
    ($($name:literal),* $(,)?) => {
        &[$(($name, include_str!(concat!("../templates/", $name, ".txt")))),*]
    };
}

pub const LAB: &[(&str, &str)] = lab_templates!(
    "lab_actions",
    "lab_light",
    "lab_noise",
    "lab_pretreatment",
    "lab_rating",
    "lab_react",
    "lab_relief",
    "lab_request",
    "lab_role",
    "lab_say",
    "lab_throw",
);

/// `gw` with the lab templates added. Templates `gw` already defines (for
/// instance from an override directory) are kept.
pub fn lab_gateway(gw: &Gateway) -> Gateway {
    let mut t: TemplateSet = gw.templates().clone();
    for (name, body) in LAB {
        if t.get(name).is_none() {
            t.insert(name, body);
        }
    }
    Gateway::new(gw.backend(), t, gw.defaults())
}
