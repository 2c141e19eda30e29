//! Per-branch cost of a single kernel step: the elastic path, the cap
//! return (4x4 Newton with hardening), and the strength-surface return.
//! Setup marches a state onto the cap and back off it so each bench
//! starts from a state that actually takes the labeled branch.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use ypcap_bench::tuff_model;
use ypcap_core::{MaterialModel, MaterialState, StepBranch, SymTensor};

fn march(
    model: &MaterialModel,
    from: MaterialState,
    de: SymTensor,
    steps: usize,
) -> MaterialState {
    let mut s = from;
    for _ in 0..steps {
        model.update_step(&mut s, &de).unwrap();
    }
    s
}

fn branch_of(model: &MaterialModel, state: &MaterialState, de: &SymTensor) -> StepBranch {
    let mut s = *state;
    model.update_step(&mut s, de).unwrap().branch
}

fn bench_kernel(c: &mut Criterion) {
    let model = tuff_model();
    let virgin = model.init_state().unwrap();

    // 200 compressive steps lands mid-crush, on the cap
    let compress = SymTensor::iso(-2.0e-4 / 3.0);
    let on_cap = march(&model, virgin, compress, 200);

    // unload until the mean stress is nearly relaxed; the evolved
    // strength surface is then within reach of one driver-scale step
    let mut unloaded = on_cap;
    while unloaded.p() < -2.0e6 {
        model
            .update_step(&mut unloaded, &SymTensor::iso(2.0e-4 / 3.0))
            .unwrap();
    }

    let elastic_de = SymTensor::new(0.0, 0.0, 0.0, 1.0e-6, 0.0, 0.0);
    let shear_de =
        SymTensor::new(0.0, 0.0, 0.0, 2.0e-3, 0.0, 0.0) + SymTensor::iso(-1.0e-5 / 3.0);

    // keep the labels honest
    assert_eq!(branch_of(&model, &virgin, &elastic_de), StepBranch::Elastic);
    assert_eq!(branch_of(&model, &on_cap, &compress), StepBranch::YieldMcc);
    assert_eq!(branch_of(&model, &unloaded, &shear_de), StepBranch::YieldYp);

    let mut group = c.benchmark_group("update_step");
    group.bench_function("elastic", |b| {
        b.iter(|| {
            let mut s = virgin;
            model.update_step(&mut s, black_box(&elastic_de)).unwrap();
            s
        })
    });
    group.bench_function("cap_return", |b| {
        b.iter(|| {
            let mut s = on_cap;
            model.update_step(&mut s, black_box(&compress)).unwrap();
            s
        })
    });
    group.bench_function("strength_return", |b| {
        b.iter(|| {
            let mut s = unloaded;
            model.update_step(&mut s, black_box(&shear_de)).unwrap();
            s
        })
    });
    group.finish();
}

criterion_group!(benches, bench_kernel);
criterion_main!(benches);
