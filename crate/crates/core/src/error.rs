use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter fell outside its admissible range.
    #[error("{name} = {value} is outside the admissible range {range}")]
    Domain {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("operation `{operation}` requires a regularly varying height law, got {dist}")]
    UnsupportedDistribution {
        operation: &'static str,
        dist: String,
    },

    #[error("site {site} is outside the window [{lo}, {hi}]")]
    SiteOutOfRange { site: i64, lo: i64, hi: i64 },

    /// Inputs that violate an almost-sure property (ties in time or weight).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("height overflowed to infinity at site {site}, time {time}")]
    Overflow { site: i64, time: f64 },

    #[error("empty sample")]
    EmptySample,

    #[error("insufficient spread for a scaling fit: {0}")]
    InsufficientSpread(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_open_unit(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain {
            name,
            value,
            range: "(0, 1)",
        })
    }
}

pub(crate) fn check_probability(name: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::Domain {
            name,
            value,
            range: "[0, 1]",
        })
    }
}

pub(crate) fn check_positive(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain {
            name,
            value,
            range: "(0, inf)",
        })
    }
}

pub(crate) fn check_alpha(value: f64) -> Result<()> {
    if value > 0.0 && value < 2.0 {
        Ok(())
    } else {
        Err(Error::Domain {
            name: "alpha",
            value,
            range: "(0, 2)",
        })
    }
}
