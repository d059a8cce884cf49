//! Shared fixtures for unit tests. Towers are built once per test binary.

use std::sync::OnceLock;

use crate::funcrep::ScalarField1D;
use crate::henon::{renorm_tower, HenonMap3D, RenormOptions, RenormTower};
use crate::unimodal::{presentation_tower, solve_fixed_point, universal_a, FixedPoint};

/// Accumulation of the cascade of the toy family with b1 = 0.1, b2 = 0.001,
/// frozen from `locate_feigenbaum`.
pub const TOY_MU: f64 = 1.561_509_064_467_65;
pub const TOY_B1: f64 = 0.1;
pub const TOY_B2: f64 = 0.001;

pub fn toy_map() -> HenonMap3D {
    HenonMap3D::toy_affine(TOY_B1, TOY_B2, TOY_MU)
}

/// Depth-6 tower of the toy map.
pub fn toy_tower() -> &'static RenormTower {
    static TOWER: OnceLock<RenormTower> = OnceLock::new();
    TOWER.get_or_init(|| renorm_tower(&toy_map(), 6, &RenormOptions::default()).expect("toy tower"))
}

pub fn fixed_point() -> &'static FixedPoint {
    static FP: OnceLock<FixedPoint> = OnceLock::new();
    FP.get_or_init(|| solve_fixed_point(20, 1e-11).expect("fixed point"))
}

/// Depth-4 tower of the degenerate map of the fixed point.
pub fn fstar_tower() -> &'static RenormTower {
    static TOWER: OnceLock<RenormTower> = OnceLock::new();
    TOWER.get_or_init(|| {
        let map = HenonMap3D::degenerate(fixed_point().map.f.clone());
        renorm_tower(&map, 4, &RenormOptions::default()).expect("degenerate tower")
    })
}

/// Accumulation of the cascade of `perturbed_toy(0.1, 0.001, mu, 0.003)`,
/// frozen from `locate_feigenbaum`.
pub const PERTURBED_MU: f64 = 1.561_502_616_156_643;
pub const PERTURBED_ETA: f64 = 0.003;

pub fn perturbed_map() -> HenonMap3D {
    HenonMap3D::perturbed_toy(TOY_B1, TOY_B2, PERTURBED_MU, PERTURBED_ETA)
}

/// Depth-6 tower of the perturbed toy map.
pub fn perturbed_tower() -> &'static RenormTower {
    static TOWER: OnceLock<RenormTower> = OnceLock::new();
    TOWER.get_or_init(|| {
        renorm_tower(&perturbed_map(), 6, &RenormOptions::default()).expect("perturbed tower")
    })
}

/// Depth-6 tower of the degenerate map of the fixed point.
pub fn fstar_tower_deep() -> &'static RenormTower {
    static TOWER: OnceLock<RenormTower> = OnceLock::new();
    TOWER.get_or_init(|| {
        let map = HenonMap3D::degenerate(fixed_point().map.f.clone());
        renorm_tower(&map, 6, &RenormOptions::default()).expect("degenerate tower")
    })
}

/// `v*` and `a(x)` of the fixed point.
pub fn universal_functions() -> &'static (ScalarField1D, ScalarField1D) {
    static FNS: OnceLock<(ScalarField1D, ScalarField1D)> = OnceLock::new();
    FNS.get_or_init(|| {
        let fstar = &fixed_point().map;
        let tower = presentation_tower(fstar, 40).expect("presentation tower");
        let a = universal_a(&tower.v, fstar).expect("universal a");
        (tower.v, a)
    })
}
