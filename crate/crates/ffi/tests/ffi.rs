use std::ffi::{c_char, CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use hazlab_ffi::*;
use serde_json::Value;

fn fixture(name: &str) -> String {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/fixtures")
        .join(name);
    std::fs::read_to_string(path).unwrap()
}

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

unsafe fn take(s: *mut c_char) -> String {
    assert!(!s.is_null());
    let out = CStr::from_ptr(s).to_str().unwrap().to_owned();
    hazlab_string_free(s);
    out
}

unsafe fn json(s: *mut c_char) -> Value {
    serde_json::from_str(&take(s)).unwrap()
}

fn last_error() -> String {
    let p = hazlab_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_owned()
}

unsafe fn load(name: &str) -> *mut HazlabProject {
    let mut p = ptr::null_mut();
    let src = c(&fixture(name));
    assert_eq!(
        hazlab_project_from_hzl(src.as_ptr(), c("fixture").as_ptr(), &mut p),
        HazlabStatus::Ok
    );
    p
}

#[test]
fn generate_and_compare() {
    unsafe {
        let p = load("oncoming_traffic.hzl");
        let mut out = ptr::null_mut();
        assert_eq!(
            hazlab_project_generate(p, c("both").as_ptr(), ptr::null(), &mut out),
            HazlabStatus::Ok
        );
        let summary = json(out);
        assert_eq!(summary["deviation"]["total"], 3);
        assert_eq!(summary["malfunction"]["total"], 9);
        assert_eq!(
            hazlab_project_compare_json(p, ptr::null(), &mut out),
            HazlabStatus::Ok
        );
        let r = json(out);
        assert_eq!(r["count_PM"], 9);
        assert_eq!(r["distinct_behaviors_PM"], 1);
        assert_eq!(r["count_PD"], 3);
        assert_eq!(r["reduction_ratio"], 3.0);
        assert_eq!(
            hazlab_project_compare_json(p, c("nope").as_ptr(), &mut out),
            HazlabStatus::NotFound
        );
        assert!(out.is_null());
        assert!(last_error().contains("nope"));
        assert_eq!(
            hazlab_project_generate(p, c("sideways").as_ptr(), ptr::null(), &mut out),
            HazlabStatus::InvalidArgument
        );
        hazlab_project_free(p);
    }
}

#[test]
fn review_cycle() {
    unsafe {
        let p = load("occluded_pedestrian.hzl");
        let mut out = ptr::null_mut();
        assert_eq!(
            hazlab_project_generate(p, c("deviation").as_ptr(), ptr::null(), &mut out),
            HazlabStatus::Ok
        );
        hazlab_string_free(out);
        let doc = c(&fixture("occluded_pedestrian.decisions.json"));
        assert_eq!(
            hazlab_project_import(p, doc.as_ptr(), ptr::null(), c("alice").as_ptr(), &mut out),
            HazlabStatus::Ok
        );
        assert_eq!(json(out)["applied"], 8);
        assert_eq!(hazlab_project_summary_json(p, &mut out), HazlabStatus::Ok);
        let s = json(out);
        assert_eq!(s["hazards_total"], 5);

        assert_eq!(
            hazlab_project_export(p, c("csv").as_ptr(), &mut out),
            HazlabStatus::Ok
        );
        let csv = take(out);
        assert!(csv.starts_with("phs_id,"));
        let row = csv.lines().find(|l| l.contains(",hazardous,")).unwrap();
        let phs = row.split(',').next().unwrap();

        let stale = format!(
            r#"{{"phs":"{phs}","new_status":"hazardous","rationale":"x","expected_version":0}}"#
        );
        assert_eq!(
            hazlab_project_record_decision(p, c(&stale).as_ptr(), &mut out),
            HazlabStatus::VersionConflict
        );
        let leave = format!(
            r#"{{"phs":"{phs}","new_status":"not_hazardous","rationale":"x","expected_version":1}}"#
        );
        assert_eq!(
            hazlab_project_record_decision(p, c(&leave).as_ptr(), &mut out),
            HazlabStatus::RuleViolation
        );
        assert!(last_error().contains("hazards still linked"));
        let amend = format!(
            r#"{{"phs":"{phs}","new_status":"hazardous","rationale":"amended","expected_version":1}}"#
        );
        assert_eq!(
            hazlab_project_record_decision(p, c(&amend).as_ptr(), &mut out),
            HazlabStatus::Ok
        );
        assert_eq!(json(out)["version"], 2);

        let empty = format!(
            r#"{{"phs":"{phs}","source":"a","target":"","initiating_mechanism":"c","target_kind":"passengers"}}"#
        );
        assert_eq!(
            hazlab_project_create_hazard(p, c(&empty).as_ptr(), &mut out),
            HazlabStatus::InvalidArgument
        );
        assert_eq!(last_error(), "target empty");
        let hazard = format!(
            r#"{{"phs":"{phs}","source":"a","target":"b","initiating_mechanism":"c","target_kind":"passengers"}}"#
        );
        assert_eq!(
            hazlab_project_create_hazard(p, c(&hazard).as_ptr(), &mut out),
            HazlabStatus::Ok
        );
        assert_eq!(json(out)["id"], "hz_006");
        assert_eq!(
            hazlab_project_trace(p, c("hz_006").as_ptr(), ptr::null(), &mut out),
            HazlabStatus::Ok
        );
        assert_eq!(json(out), serde_json::json!([]));

        assert_eq!(
            hazlab_project_record_decision(p, c("{").as_ptr(), &mut out),
            HazlabStatus::MalformedInput
        );
        assert_eq!(
            hazlab_project_import(
                p,
                c("phs_id\nx").as_ptr(),
                c("csv").as_ptr(),
                ptr::null(),
                &mut out
            ),
            HazlabStatus::MalformedInput
        );
        hazlab_project_free(p);
    }
}

#[test]
fn save_and_open() {
    unsafe {
        let dir = tempfile::tempdir().unwrap();
        let path = c(dir.path().join("p.hazproj.json").to_str().unwrap());
        let p = load("occluded_pedestrian.hzl");
        let mut out = ptr::null_mut();
        hazlab_project_generate(p, c("deviation").as_ptr(), ptr::null(), &mut out);
        hazlab_string_free(out);
        assert_eq!(hazlab_project_save(p, path.as_ptr()), HazlabStatus::Ok);
        hazlab_project_free(p);

        let mut q = ptr::null_mut();
        assert_eq!(hazlab_project_open(path.as_ptr(), &mut q), HazlabStatus::Ok);
        assert_eq!(hazlab_project_json(q, &mut out), HazlabStatus::Ok);
        assert_eq!(json(out)["phs_set"].as_array().unwrap().len(), 8);
        hazlab_project_free(q);

        assert_eq!(
            hazlab_project_open(c("/nonexistent/p.json").as_ptr(), &mut q),
            HazlabStatus::Io
        );
        assert!(q.is_null());
    }
}

#[test]
fn check_and_bad_arguments() {
    unsafe {
        let mut out = ptr::null_mut();
        let src = c(&fixture("broken.hzl"));
        assert_eq!(
            hazlab_check_source(c("broken.hzl").as_ptr(), src.as_ptr(), &mut out),
            HazlabStatus::InvalidModel
        );
        let findings = json(out);
        assert_eq!(findings[0]["code"], "E031");
        assert!(last_error().starts_with("broken.hzl:9:43: error[E031]"));

        let mut p = ptr::null_mut();
        assert_eq!(
            hazlab_project_from_hzl(src.as_ptr(), c("b").as_ptr(), &mut p),
            HazlabStatus::InvalidModel
        );
        assert!(p.is_null());
        assert_eq!(
            hazlab_project_from_hzl(ptr::null(), c("b").as_ptr(), &mut p),
            HazlabStatus::NullArgument
        );
        assert_eq!(
            hazlab_project_json(ptr::null(), &mut out),
            HazlabStatus::NullArgument
        );
        let bad = [0xffu8, 0];
        assert_eq!(
            hazlab_project_from_hzl(bad.as_ptr().cast(), c("b").as_ptr(), &mut p),
            HazlabStatus::InvalidUtf8
        );

        let ok = c(&fixture("occluded_pedestrian.hzl"));
        assert_eq!(
            hazlab_check_source(c("o.hzl").as_ptr(), ok.as_ptr(), &mut out),
            HazlabStatus::Ok
        );
        assert!(hazlab_last_error_message().is_null());
        hazlab_string_free(out);
        hazlab_string_free(ptr::null_mut());
        hazlab_project_free(ptr::null_mut());
        assert_eq!(
            CStr::from_ptr(hazlab_version()).to_str().unwrap(),
            env!("CARGO_PKG_VERSION")
        );
    }
}

#[test]
fn header_declares_every_export() {
    let header =
        std::fs::read_to_string(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include/hazlab.h"))
            .unwrap();
    let src = std::fs::read_to_string(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("src/lib.rs"))
        .unwrap();
    let exports: Vec<&str> = src
        .lines()
        .filter_map(|l| l.split("extern \"C\" fn ").nth(1))
        .map(|rest| rest.split('(').next().unwrap())
        .collect();
    assert!(exports.len() >= 15);
    for name in exports {
        assert!(
            header.contains(&format!("{name}(")),
            "{name} missing from header"
        );
    }
    assert!(header.contains("typedef struct HazlabProject HazlabProject;"));
    assert!(header.contains("HAZLAB_STATUS_VERSION_CONFLICT = 5"));
}

#[test]
fn header_compiles_as_c() {
    let Ok(cc) = which_cc() else { return };
    let dir = tempfile::tempdir().unwrap();
    let main = dir.path().join("main.c");
    std::fs::write(
        &main,
        "#include \"hazlab.h\"\nint main(void) { HazlabProject *p = 0; HazlabStatus s = hazlab_project_json(p, 0);\n  return s == HAZLAB_STATUS_NULL_ARGUMENT ? 0 : 1; }\n",
    )
    .unwrap();
    let include = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include");
    let status = Command::new(cc)
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(&include)
        .arg(&main)
        .status()
        .unwrap();
    assert!(status.success());
}

fn which_cc() -> Result<&'static str, ()> {
    ["cc", "gcc", "clang"]
        .into_iter()
        .find(|cc| {
            Command::new(cc)
                .arg("--version")
                .output()
                .is_ok_and(|o| o.status.success())
        })
        .ok_or(())
}
