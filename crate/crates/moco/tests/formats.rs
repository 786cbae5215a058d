use moco::io::{read_factor, read_instance, write_factor, write_instance, Instance};
use moco::problems::{add_noise_snr, build_matcomp, build_phase_retrieval, snr_db_of};
use moco::run::parse_config;
use moco_core::sdp::LowRankPsd;
use nalgebra::DMatrix;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn matcomp_instances_roundtrip(n in 10usize..40, seed in any::<u64>(), snr in 0.0f64..40.0) {
        let (inst, _) = build_matcomp(n, seed, snr).unwrap();
        let inst = Instance::MatComp(inst);
        let mut buf = Vec::new();
        write_instance(&mut buf, &inst).unwrap();
        prop_assert_eq!(read_instance(buf.as_slice()).unwrap(), inst);
    }

    #[test]
    fn phase_instances_roundtrip(x in prop::collection::vec(-3.0f64..3.0, 2..20), m in 1usize..5, seed in any::<u64>()) {
        prop_assume!(x.iter().any(|v| v.abs() > 1e-3));
        let (inst, _) = build_phase_retrieval(&x, m, 1e-3, seed, 15.0).unwrap();
        let inst = Instance::Phase(inst);
        let mut buf = Vec::new();
        write_instance(&mut buf, &inst).unwrap();
        prop_assert_eq!(read_instance(buf.as_slice()).unwrap(), inst);
    }

    #[test]
    fn truncated_instance_files_are_rejected(n in 10usize..20, cut in 1usize..64) {
        let (inst, _) = build_matcomp(n, 1, 20.0).unwrap();
        let mut buf = Vec::new();
        write_instance(&mut buf, &Instance::MatComp(inst)).unwrap();
        buf.truncate(buf.len().saturating_sub(cut));
        prop_assert!(read_instance(buf.as_slice()).is_err());
    }

    #[test]
    fn factors_roundtrip(n in 1usize..12, r in 1usize..4, seed in any::<u32>()) {
        let u = DMatrix::from_fn(n, r, |i, j| ((i * 31 + j * 7) as f64 + seed as f64).sin());
        let values: Vec<f64> = (0..r).map(|j| (r - j) as f64).collect();
        let factor = LowRankPsd { u, values };
        let mut buf = Vec::new();
        write_factor(&mut buf, &factor).unwrap();
        prop_assert_eq!(read_factor(buf.as_slice()).unwrap(), factor);
    }

    #[test]
    fn noise_hits_the_requested_snr(clean in prop::collection::vec(-5.0f64..5.0, 4..200), snr in -10.0f64..60.0, seed in any::<u64>()) {
        prop_assume!(clean.iter().map(|v| v * v).sum::<f64>() > 1e-6);
        let noisy = add_noise_snr(&clean, snr, seed).unwrap();
        prop_assert!((snr_db_of(&clean, &noisy) - snr).abs() <= 1e-9);
    }

    #[test]
    fn config_lines_parse_to_trimmed_pairs(key in "[a-z_]{1,12}", value in "[a-z0-9.]{1,12}") {
        let text = format!("# header\n  {key} =  {value}  # trailing\n\n");
        prop_assert_eq!(parse_config(&text).unwrap(), vec![(key, value)]);
    }
}
