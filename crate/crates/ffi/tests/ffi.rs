use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use misinfo_refine_ffi::*;

fn last_error() -> String {
    let p = mr_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

#[test]
fn config_handle_round_trip() {
    unsafe {
        let mut cfg = ptr::null_mut();
        assert_eq!(mr_config_new(&mut cfg), MrStatus::Ok);
        assert_eq!(mr_config_set(cfg, c("refinement.max_iter").as_ptr(), c("4").as_ptr()), MrStatus::Ok);
        assert_eq!(mr_config_set_seed(cfg, 17), MrStatus::Ok);

        assert_eq!(mr_config_set(cfg, c("detector.epochz").as_ptr(), c("4").as_ptr()), MrStatus::Config);
        assert!(last_error().contains("detector.epochz"));
        assert_eq!(mr_config_set(cfg, c("detector.epochs").as_ptr(), c("many").as_ptr()), MrStatus::Config);
        assert!(last_error().contains("detector.epochs"));

        let mut json = ptr::null_mut();
        assert_eq!(mr_config_to_json(cfg, &mut json), MrStatus::Ok);
        let text = CStr::from_ptr(json).to_str().unwrap().to_string();
        mr_string_free(json);
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["refinement"]["max_iter"], 4);
        assert_eq!(v["synth"]["seed"], 17);
        assert_eq!(v["detector"]["epochs"], 25);

        let mut again = ptr::null_mut();
        assert_eq!(mr_config_from_json(c(&text).as_ptr(), &mut again), MrStatus::Ok);
        mr_config_free(again);
        mr_config_free(cfg);
        mr_config_free(ptr::null_mut());
    }
}

#[test]
fn null_and_bad_arguments_are_reported() {
    unsafe {
        assert_eq!(mr_config_new(ptr::null_mut()), MrStatus::NullPointer);
        assert!(last_error().contains("out"));
        let mut cfg = ptr::null_mut();
        assert_eq!(mr_config_from_json(c("{\"detectr\": {}}").as_ptr(), &mut cfg), MrStatus::Config);
        assert!(cfg.is_null());
        assert_eq!(mr_config_from_json(c("{").as_ptr(), &mut cfg), MrStatus::Schema);
        let bad = [0xffu8, 0xfe, 0];
        assert_eq!(mr_config_from_json(bad.as_ptr().cast(), &mut cfg), MrStatus::InvalidUtf8);

        let mut out = 0.0;
        assert_eq!(mr_entropy(ptr::null(), 2, &mut out), MrStatus::NullPointer);
        assert_eq!(mr_entropy(ptr::null(), 0, &mut out), MrStatus::InvalidArgument);
        let mut model = ptr::null_mut();
        assert_eq!(mr_model_load(c("/nonexistent/model.json").as_ptr(), &mut model), MrStatus::Io);
        assert!(last_error().contains("/nonexistent/model.json"));
    }
}

#[test]
fn pure_functions() {
    unsafe {
        let mut h = 0.0;
        assert_eq!(mr_entropy([0.5, 0.5].as_ptr(), 2, &mut h), MrStatus::Ok);
        assert!((h - std::f64::consts::LN_2).abs() < 1e-12);

        let mut counts = [0usize; 4];
        for m in [MrModelState::LowConfidence, MrModelState::Consistent, MrModelState::Inconsistent] {
            for s in [MrSocialState::Unknown, MrSocialState::Consistent, MrSocialState::Inconsistent] {
                let mut a = MrAction::Remove;
                assert_eq!(mr_assign_action(m, s, &mut a), MrStatus::Ok);
                counts[a as usize] += 1;
            }
        }
        assert_eq!(counts, [2, 2, 5, 0]);
        let mut a = MrAction::Remove;
        mr_assign_action(MrModelState::Inconsistent, MrSocialState::Inconsistent, &mut a);
        assert_eq!(a, MrAction::Flip);

        let mut b = 9;
        assert_eq!(mr_binarize_fine_label(c("mostly false").as_ptr(), &mut b), MrStatus::Ok);
        assert_eq!(b, 1);
        assert_eq!(mr_binarize_fine_label(c("debunk").as_ptr(), &mut b), MrStatus::Ok);
        assert_eq!(b, 0);
        assert_eq!(mr_binarize_fine_label(c("satire").as_ptr(), &mut b), MrStatus::InvalidArgument);
        assert!(last_error().contains("mostly_true"));

        let scores = [0.9, 0.8, 0.3, 0.1];
        let labels = [1u8, 0, 1, 0];
        let (mut ap, mut auc) = (0.0, 0.0);
        assert_eq!(mr_average_precision(scores.as_ptr(), labels.as_ptr(), 4, &mut ap), MrStatus::Ok);
        assert!((ap - (1.0 + 2.0 / 3.0) / 2.0).abs() < 1e-12);
        assert_eq!(mr_roc_auc(scores.as_ptr(), labels.as_ptr(), 4, &mut auc), MrStatus::Ok);
        assert!((auc - 0.75).abs() < 1e-12);
        assert_eq!(mr_roc_auc(scores.as_ptr(), [1u8; 4].as_ptr(), 4, &mut auc), MrStatus::InvalidArgument);

        let x = [0u32, 1, 2, 3];
        let mut k = 0.0;
        assert_eq!(mr_cohens_kappa(x.as_ptr(), x.as_ptr(), 4, &mut k), MrStatus::Ok);
        assert_eq!(k, 1.0);
    }
}

#[test]
fn pipeline_through_the_c_abi() {
    let dir = tempfile::tempdir().unwrap();
    let d = c(dir.path().to_str().unwrap());
    unsafe {
        let mut cfg = ptr::null_mut();
        mr_config_new(&mut cfg);
        mr_config_set_seed(cfg, 3);
        mr_config_set(cfg, c("synth.n_cascades").as_ptr(), c("1200").as_ptr());
        mr_config_set(cfg, c("synth.n_users").as_ptr(), c("160").as_ptr());
        assert_eq!(mr_run(cfg, MrCommand::Synth, d.as_ptr(), d.as_ptr()), MrStatus::Ok, "{}", last_error());
        assert_eq!(mr_run(cfg, MrCommand::Refine, d.as_ptr(), d.as_ptr()), MrStatus::Ok, "{}", last_error());

        let mut model = ptr::null_mut();
        let path = c(dir.path().join("model.json").to_str().unwrap());
        assert_eq!(mr_model_load(path.as_ptr(), &mut model), MrStatus::Ok);
        let mut t = -1.0;
        assert_eq!(mr_model_threshold(model, &mut t), MrStatus::Ok);
        assert!((0.0..=1.0).contains(&t));
        mr_model_free(model);

        std::fs::write(dir.path().join("sources.csv"), "domain,label\n").unwrap();
        assert_eq!(mr_run(cfg, MrCommand::Refine, d.as_ptr(), d.as_ptr()), MrStatus::NoWeakLabels);
        assert_eq!(last_error(), "no weakly labeled instances");

        let empty = tempfile::tempdir().unwrap();
        let e = c(empty.path().to_str().unwrap());
        assert_eq!(mr_run(cfg, MrCommand::Refine, e.as_ptr(), e.as_ptr()), MrStatus::Io);
        assert!(last_error().contains("tweets.jsonl"));

        mr_config_set(cfg, c("refinement.mode").as_ptr(), c("interactive").as_ptr());
        assert_eq!(mr_run(cfg, MrCommand::Refine, d.as_ptr(), d.as_ptr()), MrStatus::InvalidArgument);
        mr_config_free(cfg);
    }
}

#[test]
fn version_is_the_crate_version() {
    let v = unsafe { CStr::from_ptr(mr_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn generated_header_compiles_as_c_and_cpp() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR"));
    let header = root.join("include/misinfo_refine.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for symbol in ["mr_last_error", "mr_config_new", "mr_config_set", "mr_run", "mr_model_load", "mr_assign_action", "MR_STATUS_NO_WEAK_LABELS", "typedef struct MrConfig MrConfig"] {
        assert!(text.contains(symbol), "{symbol}");
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("probe.c");
    std::fs::write(
        &src,
        "#include \"misinfo_refine.h\"\nint main(void) { MrConfig *c = 0; MrStatus s = mr_config_new(&c); mr_config_free(c); return s == MR_STATUS_OK ? 0 : 1; }\n",
    )
    .unwrap();
    for (compiler, lang) in [("cc", "c"), ("c++", "c++")] {
        let Ok(out) = Command::new(compiler)
            .args(["-fsyntax-only", "-Wall", "-Werror", "-x", lang, "-I"])
            .arg(root.join("include"))
            .arg(&src)
            .output()
        else {
            eprintln!("{compiler} not available, skipping");
            continue;
        };
        assert!(out.status.success(), "{compiler}: {}", String::from_utf8_lossy(&out.stderr));
    }
}
