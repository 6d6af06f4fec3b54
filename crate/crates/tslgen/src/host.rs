//! Capability detection for the machine the generator runs on.

use std::path::Path;

use tslgen_core::target::parse_capability_listing;
use tslgen_core::{HardwareTarget, TargetError, TargetSource};

pub const CPUINFO: &str = "/proc/cpuinfo";

#[derive(Debug, thiserror::Error)]
pub enum DetectError {
    #[error("host detection is only supported on Linux; pass --targets explicitly")]
    UnsupportedOs,
    #[error("cannot read {path}: {source}; pass --targets explicitly")]
    Unreadable { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Malformed { path: String, source: TargetError },
}

/// Reads the flag set from a capability listing file.
pub fn detect_from(path: &Path) -> Result<HardwareTarget, DetectError> {
    let shown = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| DetectError::Unreadable {
        path: shown.clone(),
        source,
    })?;
    let flags = parse_capability_listing(&text).map_err(|source| DetectError::Malformed { path: shown, source })?;
    let mut target = HardwareTarget::empty();
    target.flags = flags;
    target.source = TargetSource::HostDetected;
    Ok(target)
}

pub fn detect_host() -> Result<HardwareTarget, DetectError> {
    if cfg!(target_os = "linux") {
        detect_from(Path::new(CPUINFO))
    } else {
        Err(DetectError::UnsupportedOs)
    }
}
