//! Runs every acceptance criterion and prints one PASS/FAIL line per criterion.

use std::fs;
use std::process::{Command, ExitCode};
use std::time::Instant;

use disclosure_core::selftest::{self, CheckReport};

fn disclosure() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_disclosure"));
    cmd.env_remove(disclosure_cli::CONFIG_ENV);
    cmd
}

fn cli_determinism() -> CheckReport {
    let start = Instant::now();
    let outcome = (|| -> Result<String, String> {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let mut outputs = Vec::new();
        for run in 0..2 {
            let path = dir.path().join(format!("zone{run}.csv"));
            let status = disclosure()
                .args([
                    "zone", "--lambda", "2", "--sigma", "4", "--beta", "1", "--out",
                ])
                .arg(&path)
                .status()
                .map_err(|e| e.to_string())?;
            if !status.success() {
                return Err(format!("zone run {run} exited with {status}"));
            }
            outputs.push(fs::read(&path).map_err(|e| e.to_string())?);
        }
        if outputs[0] != outputs[1] {
            return Err("zone outputs differ".into());
        }
        let selftest = disclosure()
            .arg("selftest")
            .output()
            .map_err(|e| e.to_string())?;
        if !selftest.status.success() {
            return Err(format!(
                "selftest exited with {}:\n{}",
                selftest.status,
                String::from_utf8_lossy(&selftest.stdout)
            ));
        }
        Ok(format!(
            "zone CSV byte-identical across runs ({} bytes), selftest exit 0",
            outputs[0].len()
        ))
    })();
    let (passed, detail) = match outcome {
        Ok(detail) => (true, detail),
        Err(detail) => (false, detail),
    };
    CheckReport {
        id: 12,
        name: "CLI determinism",
        passed,
        detail,
        elapsed: start.elapsed(),
    }
}

fn main() -> ExitCode {
    let mut reports: Vec<CheckReport> = selftest::checks()
        .map(|(id, _)| {
            let report = selftest::run(id).expect("listed check exists");
            println!("{}", report.line());
            report
        })
        .collect();
    let last = cli_determinism();
    println!("{}", last.line());
    reports.push(last);
    let failed = reports.iter().filter(|r| !r.passed).count();
    println!(
        "acceptance: {} passed, {failed} failed",
        reports.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
