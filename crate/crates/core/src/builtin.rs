//! Named morphisms used throughout the checks.

use crate::error::{Error, Result};
use crate::words::Morphism;

pub const B4: [&str; 4] = ["01", "21", "03", "23"];

pub const G2: [&str; 4] = [
    "0000101001110110100",
    "0011100010100111101",
    "0000111100010110100",
    "0011110110100111101",
];

pub const G3: [&str; 4] = ["0010", "1122", "0200", "1212"];

pub const G6: [&str; 4] = ["01230", "24134", "52340", "24513"];

pub const M15: [&str; 5] = [
    "001111010010110",
    "001110100101110",
    "001101001011110",
    "000111010001011",
    "000110100001011",
];

pub const M6: [&str; 5] = ["021210", "012220", "012111", "002221", "001112"];

pub const NAMES: [&str; 6] = ["b4", "g2", "g3", "g6", "m15", "m6"];

/// Looks up a built-in morphism by name.
pub fn morphism(name: &str) -> Result<Morphism> {
    let images: &[&str] = match name {
        "b4" => &B4,
        "g2" => &G2,
        "g3" => &G3,
        "g6" => &G6,
        "m15" => &M15,
        "m6" => &M6,
        _ => {
            return Err(Error::InvalidArgument(format!(
                "unknown morphism {name:?}; expected one of {}",
                NAMES.join(", ")
            )))
        }
    };
    Morphism::from_digit_images(images)
}
