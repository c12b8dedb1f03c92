use std::ffi::{CStr, CString};
use std::process::Command;
use std::ptr;

use cmgym_ffi::*;

const SMALL: &str = "fleet_size = 5\n[synthetic.ring]\ncount = 4\nradius_m = 6000.0\n";

fn last_error() -> String {
    unsafe { CStr::from_ptr(cmgym_last_error()) }.to_string_lossy().into_owned()
}

fn new_env(cfg: &str) -> *mut CmgymEnv {
    let text = CString::new(cfg).unwrap();
    let mut env = ptr::null_mut();
    assert_eq!(unsafe { cmgym_env_new(text.as_ptr(), &mut env) }, CmgymStatus::Ok);
    assert!(!env.is_null());
    env
}

#[test]
fn episode_through_the_c_api() {
    let env = new_env(SMALL);
    unsafe {
        let obs_len = cmgym_env_observation_len(env);
        assert!(obs_len > 0);
        let mut n = 0;
        assert_eq!(cmgym_env_reset(env, 3, &mut n), CmgymStatus::Ok);
        assert_eq!(n, 5);

        let mut ids = vec![0u64; n];
        let mut len = 0;
        assert_eq!(cmgym_env_agent_ids(env, ids.as_mut_ptr(), 2, &mut len), CmgymStatus::BufferTooSmall);
        assert_eq!(len, 5);
        assert_eq!(cmgym_env_agent_ids(env, ids.as_mut_ptr(), ids.len(), &mut len), CmgymStatus::Ok);
        assert_eq!(ids, vec![0, 1, 2, 3, 4]);

        let mut obs = vec![f64::NAN; obs_len];
        assert_eq!(cmgym_env_observation(env, ids[0], obs.as_mut_ptr(), obs.len()), CmgymStatus::Ok);
        assert!(obs.iter().all(|v| v.is_finite()));
        assert_eq!(cmgym_env_observation(env, 99, obs.as_mut_ptr(), obs.len()), CmgymStatus::UnknownAgent);

        let acts = vec![4u32; n];
        let mut results = 0;
        let mut done = 0;
        for _ in 0..200 {
            assert_eq!(cmgym_env_step(env, ids.as_ptr(), acts.as_ptr(), 0, &mut results), CmgymStatus::Ok);
            let mut buf = vec![
                CmgymAgentResult {
                    agent_id: 0,
                    reward: 0.0,
                    done: false,
                    terminal: -1,
                    landed_vertiport: -1
                };
                results
            ];
            let mut got = 0;
            assert_eq!(cmgym_env_step_results(env, buf.as_mut_ptr(), buf.len(), &mut got), CmgymStatus::Ok);
            assert_eq!(got, results);
            for r in &buf {
                assert!(r.reward.is_finite());
                assert_eq!(r.done, r.terminal >= 0);
                done += r.done as usize;
            }
        }
        assert!(done > 0, "no flight finished in 200 steps");
        assert!((cmgym_env_time(env) - 200.0 * 60.0).abs() < 1e-9);
        cmgym_env_free(env);
    }
}

#[test]
fn errors_are_reported() {
    unsafe {
        let mut env = ptr::null_mut();
        let bad = CString::new("fleet_size = 0").unwrap();
        assert_eq!(cmgym_env_new(bad.as_ptr(), &mut env), CmgymStatus::Config);
        assert!(env.is_null());
        assert!(last_error().contains("fleet_size"), "{}", last_error());
        assert_eq!(cmgym_env_new(ptr::null(), ptr::null_mut()), CmgymStatus::NullPointer);

        let env = new_env(SMALL);
        assert_eq!(cmgym_env_step(env, ptr::null(), ptr::null(), 0, ptr::null_mut()), CmgymStatus::Lifecycle);
        assert_eq!(cmgym_env_reset(env, 1, ptr::null_mut()), CmgymStatus::Ok);
        let (id, act) = (0u64, 6u32);
        assert_eq!(cmgym_env_step(env, &id, &act, 1, ptr::null_mut()), CmgymStatus::BadAction);
        let (id, act) = (1000u64, 0u32);
        assert_eq!(cmgym_env_step(env, &id, &act, 1, ptr::null_mut()), CmgymStatus::UnknownAgent);
        assert!(last_error().contains("1000"));
        cmgym_env_free(env);
        cmgym_env_free(ptr::null_mut());
    }
}

#[test]
fn default_config_from_null() {
    let mut env = ptr::null_mut();
    unsafe {
        assert_eq!(cmgym_env_new(ptr::null(), &mut env), CmgymStatus::Ok);
        cmgym_env_free(env);
    }
}

#[test]
fn header_compiles_as_c() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/cmgym.h");
    let text = std::fs::read_to_string(header).expect("header generated by build.rs");
    for f in ["cmgym_env_new", "cmgym_env_free", "cmgym_env_step", "cmgym_last_error", "CMGYM_STATUS_OK"] {
        assert!(text.contains(f), "header lacks {f}");
    }
    let dir = tempfile_dir();
    let src = dir.join("check.c");
    std::fs::write(&src, format!("#include \"{header}\"\nint main(void) {{ CmgymEnv *e = 0; return (int)cmgym_env_new(0, &e); }}\n")).unwrap();
    match Command::new("cc").args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only"]).arg(&src).output() {
        Ok(out) => assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr)),
        Err(e) => eprintln!("skipping C syntax check, no cc: {e}"),
    }
}

fn tempfile_dir() -> std::path::PathBuf {
    let d = std::env::temp_dir().join(format!("cmgym-ffi-{}", std::process::id()));
    std::fs::create_dir_all(&d).unwrap();
    d
}
