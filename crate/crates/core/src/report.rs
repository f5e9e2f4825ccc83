use std::fmt;

/// Outcome of one sampled property check.
///
/// Checks run on finite samples, so a pass means "held on every sample".
/// A failed report always carries the witness that broke it.
#[derive(Debug, Clone, PartialEq)]
pub struct PropertyReport {
    pub name: String,
    pub passed: bool,
    pub witness: Vec<(f64, f64)>,
}

impl PropertyReport {
    pub fn pass(name: impl Into<String>) -> Self {
        PropertyReport { name: name.into(), passed: true, witness: Vec::new() }
    }

    pub fn fail(name: impl Into<String>, witness: Vec<(f64, f64)>) -> Self {
        assert!(!witness.is_empty(), "a failed report needs a witness");
        PropertyReport { name: name.into(), passed: false, witness }
    }

    pub fn status(&self) -> &'static str {
        if self.passed {
            "pass"
        } else {
            "fail"
        }
    }
}

/// `property=<name> status=<pass|fail> witness=<u1,v1;u2,v2|none>`
impl fmt::Display for PropertyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "property={} status={} witness=", self.name, self.status())?;
        if self.witness.is_empty() {
            return f.write_str("none");
        }
        for (k, (u, v)) in self.witness.iter().enumerate() {
            if k > 0 {
                f.write_str(";")?;
            }
            write!(f, "{u},{v}")?;
        }
        Ok(())
    }
}
