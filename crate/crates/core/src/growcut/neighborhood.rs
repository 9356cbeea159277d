use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Voxel adjacency used by the automaton and by morphology.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Connectivity {
    /// Face neighbors.
    Six,
    /// Face, edge and corner neighbors.
    #[default]
    TwentySix,
}

const SIX: [[i32; 3]; 6] = [[0, 0, -1], [0, -1, 0], [-1, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]];

const fn twenty_six() -> [[i32; 3]; 26] {
    let mut out = [[0i32; 3]; 26];
    let mut n = 0;
    let mut dz = -1;
    while dz <= 1 {
        let mut dy = -1;
        while dy <= 1 {
            let mut dx = -1;
            while dx <= 1 {
                if !(dx == 0 && dy == 0 && dz == 0) {
                    out[n] = [dx, dy, dz];
                    n += 1;
                }
                dx += 1;
            }
            dy += 1;
        }
        dz += 1;
    }
    out
}

const TWENTY_SIX: [[i32; 3]; 26] = twenty_six();

impl Connectivity {
    /// Neighbor offsets `[dx, dy, dz]`, z-major then y then x.
    ///
    /// On an x-fastest grid this is ascending linear-offset order, so the
    /// list is point-symmetric: entry `k` and entry `len - 1 - k` are
    /// opposite directions, and the second half holds the positive offsets.
    pub fn offsets(self) -> &'static [[i32; 3]] {
        match self {
            Connectivity::Six => &SIX,
            Connectivity::TwentySix => &TWENTY_SIX,
        }
    }

    pub fn count(self) -> u8 {
        match self {
            Connectivity::Six => 6,
            Connectivity::TwentySix => 26,
        }
    }
}

impl TryFrom<u8> for Connectivity {
    type Error = Error;

    fn try_from(n: u8) -> Result<Self, Error> {
        match n {
            6 => Ok(Connectivity::Six),
            26 => Ok(Connectivity::TwentySix),
            other => Err(Error::Domain(format!("connectivity must be 6 or 26, got {other}"))),
        }
    }
}

impl From<Connectivity> for u8 {
    fn from(c: Connectivity) -> u8 {
        c.count()
    }
}

impl FromStr for Connectivity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        s.trim()
            .parse::<u8>()
            .map_err(|_| Error::Domain(format!("connectivity must be 6 or 26, got `{s}`")))
            .and_then(Connectivity::try_from)
    }
}

impl fmt::Display for Connectivity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.count())
    }
}
