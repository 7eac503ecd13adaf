use std::ffi::CStr;
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use jacobi_gl_ffi::*;

fn last_error() -> String {
    let p = jgl_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn forward_invert_round_trip() {
    let v = [0.5, -0.3, 0.2, 0.9, -0.7, 0.1];
    let u = [0.04, -0.02, 0.07, 0.0, -0.05];
    unsafe {
        let mut target = ptr::null_mut();
        assert_eq!(
            jgl_operator_new(6, v.as_ptr(), u.as_ptr(), 0.0, &mut target),
            JglStatus::Ok
        );
        assert_eq!(jgl_operator_len(target), 6);

        let mut data = ptr::null_mut();
        assert_eq!(
            jgl_forward(target, JglOrientation::Left as u32, &mut data),
            JglStatus::Ok
        );
        let mut levels = [0.0; 6];
        assert_eq!(
            jgl_spectral_levels(data, levels.as_mut_ptr(), 6),
            JglStatus::Ok
        );
        assert!(levels.windows(2).all(|w| w[0] < w[1]));

        let mut free = ptr::null_mut();
        assert_eq!(jgl_operator_free_well(6, &mut free), JglStatus::Ok);
        let mut rec = ptr::null_mut();
        assert_eq!(
            jgl_invert(free, ptr::null(), data, JglMethod::Both as u32, &mut rec),
            JglStatus::Ok
        );
        let mut op = ptr::null_mut();
        assert_eq!(jgl_recovered_operator(rec, &mut op), JglStatus::Ok);
        let mut v2 = [0.0; 6];
        let mut u2 = [0.0; 5];
        assert_eq!(
            jgl_operator_potential(op, v2.as_mut_ptr(), 6),
            JglStatus::Ok
        );
        assert_eq!(jgl_operator_coupling(op, u2.as_mut_ptr(), 5), JglStatus::Ok);
        for (a, b) in v.iter().chain(&u).zip(v2.iter().chain(&u2)) {
            assert!((a - b).abs() < 1e-5);
        }

        let mut d = std::mem::zeroed::<JglDiagnostics>();
        assert_eq!(jgl_recovered_diagnostics(rec, &mut d), JglStatus::Ok);
        assert!(d.orthonormality_defect < 1e-6);
        assert!(d.recursion_gap < 1e-5);
        assert_eq!(d.right_frame, 0);

        let mut k = f64::NAN;
        assert_eq!(jgl_recovered_kernel(rec, 3, 1, &mut k), JglStatus::Ok);
        assert!(k.is_finite());
        assert_eq!(
            jgl_recovered_kernel(rec, 2, 3, &mut k),
            JglStatus::InvalidArgument
        );

        jgl_operator_free(op);
        jgl_recovered_free(rec);
        jgl_operator_free(free);
        jgl_spectral_free(data);
        jgl_operator_free(target);
    }
}

#[test]
fn synthesis_only_reports_nan_gap() {
    unsafe {
        let v = [0.1, 0.2, 0.3, 0.4];
        let u = [0.0, 0.01, 0.0];
        let mut target = ptr::null_mut();
        assert_eq!(
            jgl_operator_new(4, v.as_ptr(), u.as_ptr(), 0.0, &mut target),
            JglStatus::Ok
        );
        let mut data = ptr::null_mut();
        assert_eq!(
            jgl_forward(target, JglOrientation::Right as u32, &mut data),
            JglStatus::Ok
        );
        let mut free = ptr::null_mut();
        jgl_operator_free_well(4, &mut free);
        let mut rec = ptr::null_mut();
        assert_eq!(
            jgl_invert(
                free,
                ptr::null(),
                data,
                JglMethod::Synthesis as u32,
                &mut rec
            ),
            JglStatus::Ok
        );
        let mut d = std::mem::zeroed::<JglDiagnostics>();
        jgl_recovered_diagnostics(rec, &mut d);
        assert!(d.recursion_gap.is_nan());
        assert_eq!(d.right_frame, 1);
        jgl_recovered_free(rec);
        jgl_operator_free(free);
        jgl_spectral_free(data);
        jgl_operator_free(target);
    }
}

#[test]
fn errors_map_to_status_codes() {
    unsafe {
        let mut op = ptr::null_mut();
        assert_eq!(jgl_operator_free_well(0, &mut op), JglStatus::InvalidInput);
        assert!(last_error().contains("grid"));
        assert_eq!(
            jgl_operator_free_well(3, ptr::null_mut()),
            JglStatus::InvalidArgument
        );

        let levels = [1.0, 2.0, 3.0];
        let weights = [1.0, 1.0, 1.0];
        let mut data = ptr::null_mut();
        assert_eq!(
            jgl_spectral_new(3, levels.as_ptr(), weights.as_ptr(), 0, &mut data),
            JglStatus::InvalidInput
        );
        assert_eq!(
            jgl_spectral_new(3, levels.as_ptr(), weights.as_ptr(), 7, &mut data),
            JglStatus::InvalidArgument
        );
        assert!(data.is_null());

        let mut buf = [0.0; 1];
        jgl_operator_free_well(3, &mut op);
        assert_eq!(
            jgl_operator_potential(op, buf.as_mut_ptr(), 1),
            JglStatus::InvalidArgument
        );
        assert!(last_error().contains("3 entries"));
        let mut rec = ptr::null_mut();
        assert_eq!(jgl_roundtrip(op, &mut rec), JglStatus::Ok);
        assert_eq!(
            jgl_invert(op, ptr::null(), ptr::null(), 2, &mut rec),
            JglStatus::InvalidArgument
        );
        jgl_recovered_free(rec);
        jgl_operator_free(op);
        jgl_operator_free(ptr::null_mut());
    }
}

fn c_compiler() -> Option<String> {
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    Command::new(&cc)
        .arg("--version")
        .output()
        .ok()?
        .status
        .success()
        .then_some(cc)
}

#[test]
fn c_program_links_against_static_library() {
    let Some(cc) = c_compiler() else {
        eprintln!("no C compiler found; skipping");
        return;
    };
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    // The test binary lives in <target>/<profile>/deps; the static library one level up.
    let profile_dir = std::env::current_exe()
        .unwrap()
        .parent()
        .unwrap()
        .parent()
        .unwrap()
        .to_path_buf();
    let lib = profile_dir.join("libjacobi_gl_ffi.a");
    assert!(lib.exists(), "missing {}", lib.display());
    let out = tempfile::tempdir().unwrap();
    let exe = out.path().join("smoke");
    let status = Command::new(cc)
        .arg(manifest.join("tests/smoke.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success());
    let run = Command::new(&exe).output().unwrap();
    assert!(
        run.status.success(),
        "{}",
        String::from_utf8_lossy(&run.stderr)
    );
    assert!(String::from_utf8_lossy(&run.stdout).starts_with("max error"));
}
