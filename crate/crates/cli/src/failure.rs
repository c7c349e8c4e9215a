use std::fmt;

/// A command failure carrying its process exit code.
#[derive(Debug)]
pub enum Failure {
    /// Bad configuration or flags (exit 2).
    Config(anyhow::Error),
    /// Unreadable, unparseable or unwritable data (exit 3).
    Data(anyhow::Error),
    /// A checked invariant failed (exit 4).
    Invariant(anyhow::Error),
}

impl Failure {
    pub fn code(&self) -> i32 {
        match self {
            Failure::Config(_) => 2,
            Failure::Data(_) => 3,
            Failure::Invariant(_) => 4,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (kind, e) = match self {
            Failure::Config(e) => ("config error", e),
            Failure::Data(e) => ("data error", e),
            Failure::Invariant(e) => ("invariant violated", e),
        };
        write!(f, "{kind}: {e:#}")
    }
}

pub trait ResultExt<T> {
    fn config(self) -> Result<T, Failure>;
    fn data(self) -> Result<T, Failure>;
    fn invariant(self) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> ResultExt<T> for Result<T, E> {
    fn config(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Config(e.into()))
    }

    fn data(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Data(e.into()))
    }

    fn invariant(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Invariant(e.into()))
    }
}
