use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use roadwatch_ffi::*;

fn last_error() -> String {
    let p = rw_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn small_config() -> *mut RwConfig {
    let mut cfg = ptr::null_mut();
    let toml = CString::new("runs = 1\nscenario_count = 1\n[scenario]\nduration_ticks = 40\n").unwrap();
    assert_eq!(unsafe { rw_config_from_toml(toml.as_ptr(), &mut cfg) }, RwStatus::Ok);
    cfg
}

#[test]
fn simulate_classify_and_free() {
    let cfg = small_config();
    let mut trace = ptr::null_mut();
    assert_eq!(unsafe { rw_simulate(cfg, 0, 0, &mut trace) }, RwStatus::Ok);
    assert_eq!(unsafe { rw_trace_len(trace) }, 6 * 40 * 30);

    // Size query: zero capacity reports the needed count.
    let mut n = 0usize;
    let st = unsafe { rw_classify(cfg, trace, RwPipeline::InVehicle, 0, ptr::null_mut(), 0, &mut n) };
    assert_eq!(st, RwStatus::BufferTooSmall);
    assert_eq!(n, 6);

    let mut labels = vec![RwLabel { vehicle_id: 0, behavior: RwBehavior::Safe }; n];
    for pipeline in [RwPipeline::InVehicle, RwPipeline::Roadside] {
        let st = unsafe { rw_classify(cfg, trace, pipeline, 7, labels.as_mut_ptr(), labels.len(), &mut n) };
        assert_eq!(st, RwStatus::Ok);
        let ids: Vec<u32> = labels.iter().map(|l| l.vehicle_id).collect();
        assert_eq!(ids, vec![0, 1, 2, 3, 4, 5]);
    }

    let mut est = ptr::null_mut();
    assert_eq!(unsafe { rw_observe(cfg, trace, 1, &mut est) }, RwStatus::Ok);
    assert!(unsafe { rw_estimate_len(est) } > 0);
    unsafe {
        rw_estimate_free(est);
        rw_trace_free(trace);
        rw_config_free(cfg);
    }
}

#[test]
fn trace_file_roundtrip() {
    let cfg = small_config();
    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(dir.path().join("t.csv").to_str().unwrap()).unwrap();
    let (mut a, mut b) = (ptr::null_mut(), ptr::null_mut());
    unsafe {
        assert_eq!(rw_simulate(cfg, 0, 0, &mut a), RwStatus::Ok);
        assert_eq!(rw_trace_save(a, path.as_ptr()), RwStatus::Ok);
        assert_eq!(rw_trace_load(path.as_ptr(), &mut b), RwStatus::Ok);
        assert_eq!(rw_trace_len(a), rw_trace_len(b));
        rw_trace_free(a);
        rw_trace_free(b);
        rw_config_free(cfg);
    }
}

#[test]
fn errors_set_status_and_message() {
    let mut cfg = ptr::null_mut();
    let bad = CString::new("runs = 0").unwrap();
    assert_eq!(unsafe { rw_config_from_toml(bad.as_ptr(), &mut cfg) }, RwStatus::Config);
    assert!(last_error().contains("runs"));
    assert!(cfg.is_null());

    assert_eq!(unsafe { rw_config_from_toml(ptr::null(), &mut cfg) }, RwStatus::NullPointer);
    assert!(last_error().contains("toml"));

    let cfg = small_config();
    let mut t = ptr::null_mut();
    assert_eq!(unsafe { rw_simulate(cfg, 0, 5, &mut t) }, RwStatus::InvalidArgument);
    let missing = CString::new("/nonexistent/trace.csv").unwrap();
    assert_eq!(unsafe { rw_trace_load(missing.as_ptr(), &mut t) }, RwStatus::Io);
    assert!(last_error().contains("nonexistent"));
    assert_eq!(unsafe { rw_config_set_size(cfg, 1, 0, 1) }, RwStatus::Config);
    unsafe { rw_config_free(cfg) };
    unsafe { rw_config_free(ptr::null_mut()) };
}

#[test]
fn camera_roundtrip_through_the_abi() {
    let mut cfg = ptr::null_mut();
    assert_eq!(unsafe { rw_config_default(&mut cfg) }, RwStatus::Ok);
    let (mut u, mut v, mut x, mut y) = (0.0, 0.0, 0.0, 0.0);
    unsafe {
        assert_eq!(rw_project_to_image(cfg, 130.0, 2.0, &mut u, &mut v), RwStatus::Ok);
        assert_eq!(rw_ipm_to_ground(cfg, u, v, &mut x, &mut y), RwStatus::Ok);
        rw_config_free(cfg);
    }
    assert!((x - 130.0).abs() < 1e-6 && (y - 2.0).abs() < 1e-6);
}

#[test]
fn version_is_a_c_string() {
    let v = unsafe { CStr::from_ptr(rw_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_compiles_as_c() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/roadwatch.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for sym in ["rw_last_error_message", "rw_classify", "rw_config_free", "RW_STATUS_OK"] {
        assert!(text.contains(sym), "header lacks {sym}");
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"roadwatch.h\"\nint main(void) { RwConfig *c = 0; RwStatus s = rw_config_default(&c); rw_config_free(c); return (int)s; }\n",
    )
    .unwrap();
    let Ok(out) = Command::new("cc")
        .arg("-fsyntax-only")
        .arg("-I")
        .arg(header.parent().unwrap())
        .arg(&src)
        .output()
    else {
        eprintln!("no C compiler; skipped syntax check");
        return;
    };
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
