//! Measurement units seen next to numeric values.

use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Unit {
    Cm,
    Cm2,
    Mm,
    MmHg,
    Percent,
    MetersPerSecond,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    Length,
    Area,
    Pressure,
    Fraction,
    Velocity,
}

impl Unit {
    /// Canonical spelling used in every output file.
    pub fn as_str(self) -> &'static str {
        match self {
            Unit::Cm => "cm",
            Unit::Cm2 => "cm2",
            Unit::Mm => "mm",
            Unit::MmHg => "mmHg",
            Unit::Percent => "%",
            Unit::MetersPerSecond => "m/s",
        }
    }

    /// Map a spelling found in report text ("cm²", "mm Hg", ...) to a unit.
    pub fn from_text(s: &str) -> Option<Unit> {
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        match compact.as_str() {
            "cm" => Some(Unit::Cm),
            "cm2" | "cm²" | "cm^2" => Some(Unit::Cm2),
            "mm" => Some(Unit::Mm),
            "mmHg" | "mmhg" => Some(Unit::MmHg),
            "%" => Some(Unit::Percent),
            "m/s" => Some(Unit::MetersPerSecond),
            _ => None,
        }
    }

    pub fn dimension(self) -> Dimension {
        match self {
            Unit::Cm | Unit::Mm => Dimension::Length,
            Unit::Cm2 => Dimension::Area,
            Unit::MmHg => Dimension::Pressure,
            Unit::Percent => Dimension::Fraction,
            Unit::MetersPerSecond => Dimension::Velocity,
        }
    }

    /// Factor converting a value in this unit to the base unit of its
    /// dimension (cm for lengths).
    pub fn to_base(self) -> f64 {
        match self {
            Unit::Mm => 0.1,
            _ => 1.0,
        }
    }
}

impl FromStr for Unit {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Unit::from_text(s).ok_or_else(|| format!("unknown unit `{s}`"))
    }
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn superscript_area_normalizes() {
        assert_eq!(Unit::from_text("cm²"), Some(Unit::Cm2));
        assert_eq!(Unit::from_text("mm Hg"), Some(Unit::MmHg));
        assert_eq!(Unit::Cm2.as_str(), "cm2");
        assert_eq!(Unit::from_text("furlong"), None);
    }
}
