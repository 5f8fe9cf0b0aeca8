use cineforge_core::autolabel::{label_clip, LabelOptions};
use cineforge_core::obb::{fit_min_volume_obb_with, ObbOptions, PointCloud};
use cineforge_core::par::Exec;
use cineforge_core::render::{render_sequence_with, RenderSettings};
use cineforge_core::synth::{synth_clip, SynthOptions};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

const POLICIES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn render(c: &mut Criterion) {
    let clip = synth_clip(1, &SynthOptions::default());
    let settings = RenderSettings::default();
    let mut g = c.benchmark_group("render_16x640x480");
    for (name, exec) in POLICIES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| render_sequence_with(black_box(&clip.truth), &settings, exec))
        });
    }
    g.finish();
}

fn label(c: &mut Criterion) {
    let clip = synth_clip(2, &SynthOptions { min_entities: 3, ..Default::default() });
    let mut g = c.benchmark_group("label_clip");
    g.sample_size(10);
    for (name, exec) in POLICIES {
        let base = LabelOptions::default();
        let opts = LabelOptions { exec, obb: ObbOptions { exec, ..base.obb }, ..base };
        g.bench_function(BenchmarkId::from_parameter(name), |b| b.iter(|| label_clip(black_box(&clip.inputs), &opts)));
    }
    g.finish();
}

fn obb(c: &mut Criterion) {
    let clip = synth_clip(3, &SynthOptions::default());
    let obs = &clip.inputs.observations[0];
    let (&id, mask) = obs.masks.iter().next().expect("synthetic clips have entities");
    let pts = cineforge_core::autolabel::entity_point_cloud(mask, &obs.depth, &clip.inputs.poses[0], &clip.inputs.intrinsics)
        .expect("visible entity");
    let pc = PointCloud::new(pts).expect("non-empty");
    let mut g = c.benchmark_group(format!("obb_fit_entity{id}_{}pts", pc.len()));
    for (name, exec) in POLICIES {
        let opts = ObbOptions { exec, ..Default::default() };
        g.bench_function(BenchmarkId::from_parameter(name), |b| b.iter(|| fit_min_volume_obb_with(black_box(&pc), &opts)));
    }
    g.finish();
}

criterion_group!(benches, render, label, obb);
criterion_main!(benches);
