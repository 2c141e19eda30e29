//! Shared fixtures for the benches: the dry porous tuff column the rest
//! of the suite exercises, and its standard cavity pulse.

use ypcap_core::shock1d::CavityLoad;
use ypcap_core::{
    AnalyticEos, CrushParams, ElasticParams, Eos, MaterialModel, MaterialParams, ShearMode,
    SolverParams, YieldParams,
};

const GPA: f64 = 1.0e9;

/// Dry porous tuff with full damage coupling (X = 1).
pub fn tuff_model() -> MaterialModel {
    let rho0 = 1910.25;
    let g0 = 3.972 * GPA;
    let params = MaterialParams {
        rho0,
        t0: 298.15,
        elastic: ElasticParams::new(g0, 0.25, ShearMode::ConstantG).unwrap(),
        crush: CrushParams::new(7.0 * GPA, 2.0e6, 255.0, 0.0217).unwrap(),
        yld: YieldParams::new(0.1617 * GPA, 0.1436 * GPA, 0.175 * GPA, 1.0, -0.095 * GPA)
            .unwrap(),
        solver: SolverParams::default(),
    };
    let eos = Eos::Analytic(AnalyticEos::new(
        rho0 / (1.0 - params.crush.z_max),
        298.15,
        2.0 * g0 * 1.25 / 1.5,
        1.0,
        1000.0,
    ));
    MaterialModel::new(params, eos).unwrap()
}

/// Exponential cavity pulse: 5.38 GPa peak decaying to 2% over 10 ms.
pub fn desk_load() -> CavityLoad {
    CavityLoad::new(5.38 * GPA, 0.01 / 50.0f64.ln(), 0.01).unwrap()
}
