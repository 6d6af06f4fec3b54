//! Hardware targets: the capability flags and register widths a library is
//! generated for.

use alloc::borrow::ToOwned;
use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::model::{BaseType, DataModel, ExtensionSpec};

/// Register widths used for size-polymorphic extensions when none are
/// requested explicitly.
pub const DEFAULT_POLYMORPHIC_SIZES: [u32; 5] = [128, 256, 512, 1024, 2048];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetSource {
    Explicit,
    HostDetected,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TargetError {
    #[error("empty capability flag")]
    EmptyFlag,
    #[error("register size {0} is not a positive multiple of 8 bits")]
    InvalidSize(u32),
    #[error("capability listing has no `flags` or `Features` line; pass the target flags explicitly")]
    NoCapabilityLine,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HardwareTarget {
    pub flags: BTreeSet<String>,
    /// Sorted, deduplicated.
    pub requested_sizes_bits: Vec<u32>,
    /// Size-polymorphic extensions the user asked for by name.
    pub opt_in_extensions: BTreeSet<String>,
    pub source: TargetSource,
}

/// Lowercases and trims a raw flag.
pub fn normalize_flag(raw: &str) -> Result<String, TargetError> {
    let trimmed = raw.trim();
    if trimmed.is_empty() {
        return Err(TargetError::EmptyFlag);
    }
    Ok(trimmed.to_lowercase())
}

/// Builds an explicit target from user-supplied flag texts and sizes.
pub fn parse_target<S: AsRef<str>>(flag_texts: &[S], sizes: &[u32]) -> Result<HardwareTarget, TargetError> {
    let flags = flag_texts
        .iter()
        .map(|f| normalize_flag(f.as_ref()))
        .collect::<Result<BTreeSet<_>, _>>()?;
    let sizes: BTreeSet<u32> = sizes
        .iter()
        .map(|&s| {
            if s == 0 || s % 8 != 0 {
                Err(TargetError::InvalidSize(s))
            } else {
                Ok(s)
            }
        })
        .collect::<Result<_, _>>()?;
    Ok(HardwareTarget {
        flags,
        requested_sizes_bits: sizes.into_iter().collect(),
        opt_in_extensions: BTreeSet::new(),
        source: TargetSource::Explicit,
    })
}

/// Extracts the flag set from an OS capability listing (Linux
/// `/proc/cpuinfo` style). Uses the first line starting with `flags` (x86)
/// or `Features` (ARM).
pub fn parse_capability_listing(text: &str) -> Result<BTreeSet<String>, TargetError> {
    let line = text
        .lines()
        .find(|l| {
            let l = l.trim_start();
            l.starts_with("flags") || l.starts_with("Features")
        })
        .ok_or(TargetError::NoCapabilityLine)?;
    let (_, list) = line.split_once(':').ok_or(TargetError::NoCapabilityLine)?;
    Ok(list.split_whitespace().filter_map(|f| normalize_flag(f).ok()).collect())
}

impl HardwareTarget {
    pub fn empty() -> Self {
        Self {
            flags: BTreeSet::new(),
            requested_sizes_bits: Vec::new(),
            opt_in_extensions: BTreeSet::new(),
            source: TargetSource::Explicit,
        }
    }

    pub fn with_opt_in<I, S>(mut self, names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        self.opt_in_extensions
            .extend(names.into_iter().map(|n| n.as_ref().trim().to_owned()));
        self
    }

    pub fn has_all<'a, I>(&self, flags: I) -> bool
    where
        I: IntoIterator<Item = &'a String>,
    {
        flags.into_iter().all(|f| self.flags.contains(f))
    }

    /// Scalar is always on, size-polymorphic extensions need an explicit
    /// opt-in, everything else needs its base flags.
    pub fn enables(&self, extension: &ExtensionSpec) -> bool {
        if extension.is_scalar() {
            true
        } else if extension.is_size_polymorphic() {
            self.opt_in_extensions.contains(&extension.extension_name)
        } else {
            self.has_all(&extension.lscpu_flags)
        }
    }

    /// Register widths an extension is generated for with element type
    /// `ctype`.
    pub fn sizes_for(&self, extension: &ExtensionSpec, ctype: BaseType) -> Vec<u32> {
        if extension.is_scalar() {
            alloc::vec![ctype.bits()]
        } else if extension.is_size_polymorphic() {
            if self.requested_sizes_bits.is_empty() {
                DEFAULT_POLYMORPHIC_SIZES.to_vec()
            } else {
                self.requested_sizes_bits.clone()
            }
            .into_iter()
            .filter(|bits| bits % ctype.bits() == 0)
            .collect()
        } else {
            alloc::vec![extension.default_size_bits]
        }
    }

    /// Opt-in names that do not match any size-polymorphic extension.
    pub fn unmatched_opt_ins(&self, model: &DataModel) -> Vec<String> {
        self.opt_in_extensions
            .iter()
            .filter(|n| !model.extension(n).is_some_and(ExtensionSpec::is_size_polymorphic))
            .cloned()
            .collect()
    }

    /// Flags rendered back to text, one per element.
    pub fn flag_texts(&self) -> Vec<String> {
        self.flags.iter().map(ToString::to_string).collect()
    }
}
