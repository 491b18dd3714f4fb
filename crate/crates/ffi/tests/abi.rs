use std::ffi::{CStr, CString};
use std::ptr;

use beliefdiag_ffi::*;

const RAIN: &str = "node Rain : yes no
node Grass : wet dry
cpt Rain { [] : 0.2 0.8 ; }
cpt Grass | Rain { [yes] : 0.9 0.1 ; [no] : 0.2 0.8 ; }
";

fn parse(text: &str) -> Result<*mut BdDiagram, (BdStatus, String)> {
    let c = CString::new(text).unwrap();
    let mut d = ptr::null_mut();
    let status = unsafe { bd_diagram_parse(c.as_ptr(), &mut d) };
    if status == BdStatus::Ok {
        Ok(d)
    } else {
        Err((status, last_error()))
    }
}

fn last_error() -> String {
    let p = bd_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn query_round_trip() {
    let d = parse(RAIN).unwrap();
    unsafe {
        let mut n = 0;
        assert_eq!(bd_diagram_node_count(d, &mut n), BdStatus::Ok);
        assert_eq!(n, 2);
        let name = CString::new("Grass").unwrap();
        let mut grass = 99;
        assert_eq!(
            bd_diagram_node_index(d, name.as_ptr(), &mut grass),
            BdStatus::Ok
        );
        assert_eq!(grass, 1);
        let mut k = 0;
        assert_eq!(bd_diagram_outcome_count(d, grass, &mut k), BdStatus::Ok);
        assert_eq!(k, 2);

        let wet = CString::new("wet").unwrap();
        assert_eq!(
            bd_diagram_observe(d, name.as_ptr(), wet.as_ptr()),
            BdStatus::Ok
        );
        for strategy in [BD_STRATEGY_BATCH, BD_STRATEGY_MESSAGE, BD_STRATEGY_PRIORITY] {
            let mut r = ptr::null_mut();
            assert_eq!(bd_query(d, strategy, false, &mut r), BdStatus::Ok);
            let mut p = 0.0;
            assert_eq!(bd_report_marginal(r, 0, 0, &mut p), BdStatus::Ok);
            assert!((p - 0.18 / 0.34).abs() < 1e-12);
            assert_eq!(bd_report_marginal(r, 0, 5, &mut p), BdStatus::OutOfRange);
            bd_report_free(r);
        }
        assert_eq!(bd_diagram_clear_evidence(d), BdStatus::Ok);
        let mut r = ptr::null_mut();
        assert_eq!(bd_query(d, BD_STRATEGY_BATCH, false, &mut r), BdStatus::Ok);
        let mut p = 0.0;
        bd_report_marginal(r, 0, 0, &mut p);
        assert!((p - 0.2).abs() < 1e-12);
        bd_report_free(r);

        let mut s = ptr::null_mut();
        assert_eq!(bd_diagram_write(d, &mut s), BdStatus::Ok);
        let written = CStr::from_ptr(s).to_str().unwrap().to_string();
        bd_string_free(s);
        assert!(written.starts_with("node Rain : yes no\n"));
        assert_eq!(bd_diagram_dot(d, &mut s), BdStatus::Ok);
        assert!(CStr::from_ptr(s)
            .to_str()
            .unwrap()
            .starts_with("digraph belief {"));
        bd_string_free(s);
        bd_diagram_free(d);
    }
}

#[test]
fn errors_carry_status_and_message() {
    let (status, msg) = parse("node A : x x\n").unwrap_err();
    assert_eq!(status, BdStatus::ParseError);
    assert!(msg.contains("line 1"), "{msg}");

    let (status, _) = parse("node A : x y\nnode B : u v\ncpt A | B { [u] : 1 1 ; [v] : 1 1 ; }\ncpt B | A { [x] : 1 1 ; [y] : 1 1 ; }\n").unwrap_err();
    assert_eq!(status, BdStatus::InvalidDiagram);

    let d = parse(RAIN).unwrap();
    unsafe {
        let node = CString::new("Rain").unwrap();
        let bad = CString::new("maybe").unwrap();
        assert_eq!(
            bd_diagram_observe(d, node.as_ptr(), bad.as_ptr()),
            BdStatus::UnknownOutcome
        );
        assert!(last_error().contains("maybe"));
        let nobody = CString::new("Snow").unwrap();
        let mut idx = 0;
        assert_eq!(
            bd_diagram_node_index(d, nobody.as_ptr(), &mut idx),
            BdStatus::UnknownNode
        );
        let mut r = ptr::null_mut();
        assert_eq!(bd_query(d, 7, false, &mut r), BdStatus::OutOfRange);
        assert!(r.is_null());
        assert_eq!(
            bd_diagram_node_count(ptr::null(), &mut idx),
            BdStatus::NullArgument
        );
        assert_eq!(
            bd_diagram_node_count(d, ptr::null_mut()),
            BdStatus::NullArgument
        );
        let mut out = ptr::null_mut();
        assert_eq!(
            bd_diagram_parse(ptr::null(), &mut out),
            BdStatus::NullArgument
        );
        bd_diagram_free(d);
        bd_diagram_free(ptr::null_mut());
        bd_report_free(ptr::null_mut());
        bd_string_free(ptr::null_mut());
    }
}

#[test]
fn impossible_and_structural_failures() {
    let d = parse(
        "node Rain : yes no\nnode Grass : wet dry\ncpt Rain { [] : 1 0 ; }\ncpt Grass | Rain { [yes] : 0 1 ; [no] : 1 1 ; }\n",
    )
    .unwrap();
    unsafe {
        let node = CString::new("Grass").unwrap();
        let wet = CString::new("wet").unwrap();
        bd_diagram_observe(d, node.as_ptr(), wet.as_ptr());
        let mut r = ptr::null_mut();
        assert_eq!(
            bd_query(d, BD_STRATEGY_BATCH, false, &mut r),
            BdStatus::ImpossibleEvidence
        );
        bd_diagram_free(d);
    }
    let d = parse(
        "node A : x y\nnode B : x y\nnode C : x y\ncpt A { [] : 1 1 ; }\ncpt B { [] : 1 1 ; }\ncpt C | A B { [x x] : 1 1 ; [x y] : 1 1 ; [y x] : 1 1 ; [y y] : 1 1 ; }\n",
    )
    .unwrap();
    unsafe {
        let mut r = ptr::null_mut();
        assert_eq!(
            bd_query(d, BD_STRATEGY_MESSAGE, false, &mut r),
            BdStatus::NotAForest
        );
        bd_diagram_free(d);
    }
}

#[test]
fn success_clears_the_error() {
    let _ = parse("nonsense");
    assert!(!bd_last_error_message().is_null());
    let d = parse(RAIN).unwrap();
    assert!(bd_last_error_message().is_null());
    unsafe { bd_diagram_free(d) };
}
