//! Scenario geometry files.
//!
//! A geometry file is TOML with an optional `[default]` site and per-case
//! `[cases.<id>]` sites. Each site lists reference paths (the ego route
//! first, optionally the other vehicle's route second), convex obstacle
//! polygons, an optional occupancy grid, an optional conflict point and the
//! desired speed.
//!
//! ```toml
//! [default]
//! v_desired = 10.0
//! conflict_point = [0.0, -25.0]
//!
//! [[default.reference_paths]]
//! lane_width = 3.5
//! line = [[-40.0, -40.0], [0.0, -25.0], [25.0, 0.0]]
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use smirl_core::geometry::{ConvexPolygon, OccupancyGrid, Point2};
use smirl_core::types::ReferencePath;
use smirl_core::{Scenario, Trajectory};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiteGeometry {
    pub v_desired: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conflict_point: Option<Point2>,
    pub reference_paths: Vec<ReferencePath>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub obstacles: Vec<ConvexPolygon>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<OccupancyGrid>,
}

impl SiteGeometry {
    pub fn from_scenario(sc: &Scenario) -> Self {
        SiteGeometry {
            v_desired: sc.v_desired,
            conflict_point: sc.conflict_point,
            reference_paths: sc.reference_paths.clone(),
            obstacles: sc.obstacles.clone(),
            grid: sc.grid.clone(),
        }
    }

    pub fn scenario(&self, other_agent: Option<Trajectory>) -> Scenario {
        Scenario {
            reference_paths: self.reference_paths.clone(),
            obstacles: self.obstacles.clone(),
            grid: self.grid.clone(),
            other_agent,
            conflict_point: self.conflict_point,
            v_desired: self.v_desired,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GeometryFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub default: Option<SiteGeometry>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub cases: BTreeMap<String, SiteGeometry>,
}

impl GeometryFile {
    /// The case's own site, else the default site.
    pub fn for_case(&self, id: &str) -> Option<&SiteGeometry> {
        self.cases.get(id).or(self.default.as_ref())
    }

    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Format(format!("geometry: {e}")))
    }

    pub fn to_text(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Format(format!("geometry: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
    }
}
