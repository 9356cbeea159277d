use std::fmt;
use std::str::FromStr;

use super::{dilate, erode, remove_islands, IslandPolicy};
use crate::error::{Error, Result};
use crate::growcut::Connectivity;
use crate::volgrid::LabelVolume;

/// One post-editing step, written `dilate:N`, `erode:N`,
/// `islands:keep_largest` or `islands:min_size:K`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PostOp {
    Dilate(usize),
    Erode(usize),
    Islands(IslandPolicy),
}

impl PostOp {
    pub fn apply(&self, mask: &LabelVolume, conn: Connectivity) -> Result<LabelVolume> {
        match *self {
            PostOp::Dilate(n) => dilate(mask, conn, n),
            PostOp::Erode(n) => erode(mask, conn, n),
            PostOp::Islands(policy) => remove_islands(mask, conn, policy),
        }
    }
}

fn unknown(token: &str) -> Error {
    Error::Domain(format!("unknown post-processing op `{token}`"))
}

impl FromStr for PostOp {
    type Err = Error;

    fn from_str(token: &str) -> Result<Self> {
        let parts: Vec<&str> = token.split(':').map(str::trim).collect();
        let count = |s: &str| s.parse::<usize>().ok().filter(|&n| n >= 1).ok_or_else(|| unknown(token));
        match parts.as_slice() {
            ["dilate", n] => Ok(PostOp::Dilate(count(n)?)),
            ["erode", n] => Ok(PostOp::Erode(count(n)?)),
            ["islands", "keep_largest"] => Ok(PostOp::Islands(IslandPolicy::KeepLargest)),
            ["islands", "min_size", k] => Ok(PostOp::Islands(IslandPolicy::MinSize(count(k)?))),
            _ => Err(unknown(token)),
        }
    }
}

impl fmt::Display for PostOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PostOp::Dilate(n) => write!(f, "dilate:{n}"),
            PostOp::Erode(n) => write!(f, "erode:{n}"),
            PostOp::Islands(IslandPolicy::KeepLargest) => f.write_str("islands:keep_largest"),
            PostOp::Islands(IslandPolicy::MinSize(k)) => write!(f, "islands:min_size:{k}"),
        }
    }
}

/// Parses a comma-separated op list; an empty string is the empty pipeline.
pub fn parse_pipeline(spec: &str) -> Result<Vec<PostOp>> {
    spec.split(',').map(str::trim).filter(|t| !t.is_empty()).map(str::parse).collect()
}

/// Applies `ops` left to right.
pub fn apply_pipeline(mask: &LabelVolume, ops: &[PostOp], conn: Connectivity) -> Result<LabelVolume> {
    ops.iter().try_fold(mask.clone(), |m, op| op.apply(&m, conn))
}
