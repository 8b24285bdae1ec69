use std::process::{Command, Output};

use serde_json::Value;

pub fn mubs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mubs"))
        .args(args)
        .env_remove("MUBS_SEED")
        .output()
        .expect("mubs binary runs")
}

pub fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

pub fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}); stderr: {}",
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

pub fn result(out: &Output) -> Value {
    json(out)["result"].clone()
}

pub fn f64_at(v: &Value, pointer: &str) -> f64 {
    v.pointer(pointer)
        .and_then(Value::as_f64)
        .unwrap_or_else(|| panic!("no number at {pointer} in {v}"))
}
