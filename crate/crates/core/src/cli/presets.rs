//! Bundled experiment presets and oracle instances.

const PRESETS: &[(&str, &str)] = &[
    ("fig4", include_str!("../../presets/fig4.toml")),
    ("fig5", include_str!("../../presets/fig5.toml")),
    ("fig6", include_str!("../../presets/fig6.toml")),
    ("fig7", include_str!("../../presets/fig7.toml")),
    ("fig8", include_str!("../../presets/fig8.toml")),
];

const INSTANCES: &[(&str, &str)] = &[
    ("two-dev-m2-uniform", include_str!("../../instances/two-dev-m2-uniform.json")),
    ("two-dev-m1-uniform", include_str!("../../instances/two-dev-m1-uniform.json")),
    ("all-silence", include_str!("../../instances/all-silence.json")),
    ("lone-transmitter", include_str!("../../instances/lone-transmitter.json")),
];

pub fn preset_text(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

pub fn preset_names() -> Vec<&'static str> {
    PRESETS.iter().map(|(n, _)| *n).collect()
}

pub fn instance_text(name: &str) -> Option<&'static str> {
    INSTANCES.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

pub fn instance_names() -> Vec<&'static str> {
    INSTANCES.iter().map(|(n, _)| *n).collect()
}
