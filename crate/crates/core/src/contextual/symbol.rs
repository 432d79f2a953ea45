use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// A glued tuple of expert-transition names plus the total number of
/// skipped transitions between its first and last name. Rendered as
/// `#e1+e2+e3@k`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ContextSymbol {
    pub names: Vec<String>,
    pub gap: usize,
}

impl ContextSymbol {
    pub fn new<S: Into<String>>(names: impl IntoIterator<Item = S>, gap: usize) -> Self {
        ContextSymbol {
            names: names.into_iter().map(Into::into).collect(),
            gap,
        }
    }

    /// Order of symbols emitted by one step: smaller gap first, then by name tuple.
    pub fn emission_cmp(&self, other: &Self) -> Ordering {
        self.gap.cmp(&other.gap).then_with(|| self.names.cmp(&other.names))
    }
}

impl fmt::Display for ContextSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}@{}", self.names.join("+"), self.gap)
    }
}

impl FromStr for ContextSymbol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidToken(s.to_string());
        let body = s.strip_prefix('#').ok_or_else(bad)?;
        let (names, gap) = body.rsplit_once('@').ok_or_else(bad)?;
        let gap = gap.parse().map_err(|_| bad())?;
        let names: Vec<String> = names.split('+').map(str::to_string).collect();
        if names.iter().any(String::is_empty) {
            return Err(bad());
        }
        Ok(ContextSymbol { names, gap })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_and_parse() {
        let s = ContextSymbol::new(["e1", "e3", "e5"], 2);
        assert_eq!(s.to_string(), "#e1+e3+e5@2");
        assert_eq!("#e1+e3+e5@2".parse::<ContextSymbol>().unwrap(), s);
        assert!("e1@0".parse::<ContextSymbol>().is_err());
        assert!("#e1+@0".parse::<ContextSymbol>().is_err());
    }

    #[test]
    fn emission_order() {
        let a = ContextSymbol::new(["e3", "e4", "e5"], 0);
        let b = ContextSymbol::new(["e2", "e3", "e5"], 1);
        let c = ContextSymbol::new(["e2", "e4", "e5"], 1);
        assert_eq!(a.emission_cmp(&b), Ordering::Less);
        assert_eq!(b.emission_cmp(&c), Ordering::Less);
    }
}
