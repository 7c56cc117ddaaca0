//! Resource budgets for the combinatorial search operations.
//!
//! Enumeration and witness counting are exact and exhaustive, so they get
//! hard caps instead of timeouts. The defaults are sized for desk-scale
//! inputs; `GUARDED_PROC_LIMITS` overrides them process-wide, e.g.
//! `GUARDED_PROC_LIMITS=carrier=10,pfin=6,witness=65536,states=2000`.

/// Hard caps for enumeration and witness search.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Limits {
    /// Maximum carrier size accepted by `enumerate`.
    pub carrier: usize,
    /// Maximum cardinality of an enumerated `Pfin` layer.
    pub pfin_card: usize,
    /// Maximum number of candidates a witness search may cover.
    pub witness_space: u64,
    /// Default cap on explored states when compiling a process to a system.
    pub states: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            carrier: 8,
            pfin_card: 8,
            witness_space: 1 << 20,
            states: 10_000,
        }
    }
}

/// Environment variable consulted by [`Limits::from_env`].
pub const LIMITS_ENV: &str = "GUARDED_PROC_LIMITS";

impl Limits {
    /// Defaults overridden by any keys present in `GUARDED_PROC_LIMITS`.
    ///
    /// Unknown keys and malformed entries are reported as errors rather
    /// than ignored, so a typo cannot silently run with default budgets.
    pub fn from_env() -> Result<Self, String> {
        match std::env::var(LIMITS_ENV) {
            Ok(s) => Self::parse(&s),
            Err(_) => Ok(Limits::default()),
        }
    }

    /// Parses a `key=value,key=value` override string.
    pub fn parse(s: &str) -> Result<Self, String> {
        let mut limits = Limits::default();
        for item in s.split(',').map(str::trim).filter(|i| !i.is_empty()) {
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| format!("limit entry `{item}` is not key=value"))?;
            let parse = |v: &str| {
                v.trim()
                    .parse::<u64>()
                    .map_err(|_| format!("limit `{key}` has non-numeric value `{v}`"))
            };
            match key.trim() {
                "carrier" => limits.carrier = parse(value)? as usize,
                "pfin" => limits.pfin_card = parse(value)? as usize,
                "witness" => limits.witness_space = parse(value)?,
                "states" => limits.states = parse(value)? as usize,
                other => return Err(format!("unknown limit key `{other}`")),
            }
        }
        Ok(limits)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_overrides() {
        let l = Limits::parse("carrier=3, pfin=5,witness=1024,states=42").unwrap();
        assert_eq!(
            l,
            Limits {
                carrier: 3,
                pfin_card: 5,
                witness_space: 1024,
                states: 42
            }
        );
    }

    #[test]
    fn parse_partial_keeps_defaults() {
        let l = Limits::parse("pfin=2").unwrap();
        assert_eq!(l.pfin_card, 2);
        assert_eq!(l.carrier, Limits::default().carrier);
    }

    #[test]
    fn parse_rejects_junk() {
        assert!(Limits::parse("carrier").is_err());
        assert!(Limits::parse("voltage=9").is_err());
        assert!(Limits::parse("carrier=lots").is_err());
    }
}
