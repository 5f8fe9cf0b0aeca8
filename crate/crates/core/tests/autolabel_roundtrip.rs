use cineforge_core::autolabel::{label_clip, LabelOptions};
use cineforge_core::io::ingest::{ingest_label_inputs, write_synth_clip};
use cineforge_core::par::Exec;
use cineforge_core::synth::{synth_clip, SynthOptions};

#[test]
fn synthetic_clips_are_recovered() {
    let opts = SynthOptions::default();
    for seed in 0..20 {
        let clip = synth_clip(seed, &opts);
        let out = label_clip(&clip.inputs, &LabelOptions::default()).unwrap();
        assert!(out.report.dropped.is_empty(), "seed {seed}: {:?}", out.report.dropped);
        for truth in &clip.truth.entities {
            let got = out.scene.entity(truth.id).unwrap();
            assert_eq!(got.label, truth.label);
            assert_eq!(got.track.len() as u32, opts.frame_count);
            let v0 = got.box_at(0).unwrap().volume();
            for f in 0..opts.frame_count {
                let (g, t) = (got.box_at(f).unwrap(), truth.box_at(f).unwrap());
                assert!((g.center - t.center).norm() <= 0.02, "seed {seed} entity {} frame {f}", truth.id);
                assert!((g.volume() / t.volume() - 1.0).abs() <= 0.05);
                assert_eq!(g.volume().to_bits(), v0.to_bits());
            }
        }
    }
}

#[test]
fn labeling_from_disk_matches_labeling_in_memory() {
    let dir = tempfile::tempdir().unwrap();
    let clip = synth_clip(3, &SynthOptions::default());
    write_synth_clip(&clip, dir.path(), Exec::default()).unwrap();
    let inputs = ingest_label_inputs(dir.path(), Exec::default()).unwrap();
    let a = label_clip(&clip.inputs, &LabelOptions::default()).unwrap();
    let b = label_clip(&inputs, &LabelOptions::default()).unwrap();
    for (ea, eb) in a.scene.entities.iter().zip(&b.scene.entities) {
        for f in 0..16 {
            assert!((ea.box_at(f).unwrap().center - eb.box_at(f).unwrap().center).norm() < 1e-6);
        }
    }
}

#[test]
fn execution_policy_does_not_change_labels() {
    let clip = synth_clip(8, &SynthOptions::default());
    let seq = label_clip(&clip.inputs, &LabelOptions { exec: Exec::Sequential, ..Default::default() }).unwrap();
    let par = label_clip(&clip.inputs, &LabelOptions { exec: Exec::Parallel, ..Default::default() }).unwrap();
    assert_eq!(seq.scene, par.scene);
}
