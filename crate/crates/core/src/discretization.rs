use crate::error::Result;
use crate::interface::{CutInfo, LevelSet};
use crate::mesh::{build_uniform_mesh, Mesh, Rect};
use crate::xfem::{build_extended_space, ExtendedDofMap};

/// Mesh, cut geometry and extended space for one refinement level.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub mesh: Mesh,
    pub cut_info: CutInfo,
    pub space: ExtendedDofMap,
}

impl Discretization {
    pub fn new(rect: Rect, n: usize, level_set: &LevelSet) -> Result<Self> {
        let mesh = build_uniform_mesh(rect, n)?;
        Self::from_mesh(mesh, level_set)
    }

    pub fn from_mesh(mesh: Mesh, level_set: &LevelSet) -> Result<Self> {
        let cut_info = CutInfo::build(&mesh, level_set)?;
        let space = build_extended_space(&mesh, &cut_info);
        Ok(Self {
            mesh,
            cut_info,
            space,
        })
    }

    pub fn num_dofs(&self) -> usize {
        self.space.num_dofs()
    }

    pub fn h(&self) -> f64 {
        self.mesh.h
    }
}
