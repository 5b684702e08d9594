//! Built-in presets, shipped as TOML next to the crate.

pub const NAMES: [&str; 5] = ["rigid-body", "heavy-top", "so3-advected", "taylor-green", "orszag-tang-like"];

pub fn get(name: &str) -> Option<&'static str> {
    Some(match name {
        "rigid-body" => include_str!("../presets/rigid-body.toml"),
        "heavy-top" => include_str!("../presets/heavy-top.toml"),
        "so3-advected" => include_str!("../presets/so3-advected.toml"),
        "taylor-green" => include_str!("../presets/taylor-green.toml"),
        "orszag-tang-like" => include_str!("../presets/orszag-tang-like.toml"),
        _ => return None,
    })
}
