use alloc::string::String;
use core::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Level {
    Debug,
    Info,
    Warn,
    Error,
}

impl Level {
    pub fn as_str(self) -> &'static str {
        match self {
            Level::Debug => "DEBUG",
            Level::Info => "INFO",
            Level::Warn => "WARN",
            Level::Error => "ERROR",
        }
    }
}

/// One generator message. Renders as `LEVEL <stage>: message`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub level: Level,
    pub stage: String,
    pub message: String,
}

impl Diagnostic {
    pub fn new(level: Level, stage: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            level,
            stage: stage.into(),
            message: message.into(),
        }
    }

    pub fn info(stage: impl Into<String>, message: impl Into<String>) -> Self {
        Self::new(Level::Info, stage, message)
    }

    pub fn warn(stage: impl Into<String>, message: impl Into<String>) -> Self {
        Self::new(Level::Warn, stage, message)
    }

    pub fn error(stage: impl Into<String>, message: impl Into<String>) -> Self {
        Self::new(Level::Error, stage, message)
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}: {}", self.level.as_str(), self.stage, self.message)
    }
}
