#![allow(dead_code)]

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Output, Stdio};

use vcrobust_core::audio::{write_wav, AudioBuffer, WavEncoding};
use vcrobust_core::augment::SeededRng;
use vcrobust_core::oracles::speech_shaped;

pub const ADMIN: &str = "acceptance-admin";

pub fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_vcrobust"));
    c.env_remove("VCROBUST_LOG").env_remove("VCROBUST_ADMIN_TOKEN");
    c
}

pub fn run_bin(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn vcrobust")
}

pub fn speech_wav(path: &Path, len: usize, rate: u32, seed: u64) {
    std::fs::create_dir_all(path.parent().unwrap()).unwrap();
    let mut rng = SeededRng::new(seed);
    let b = AudioBuffer::new(speech_shaped(len, rate, &mut rng), rate).unwrap();
    write_wav(&b, path, WavEncoding::Pcm16).unwrap();
}

pub fn noise_dir(dir: &Path) -> PathBuf {
    let d = dir.join("noise");
    std::fs::create_dir_all(&d).unwrap();
    let mut rng = SeededRng::new(404);
    let hiss = AudioBuffer::from_fn(12_000, 16_000, |_| rng.uniform_range(-0.3, 0.3)).unwrap();
    write_wav(&hiss, d.join("hiss.wav"), WavEncoding::Pcm16).unwrap();
    let hum = AudioBuffer::from_fn(8_000, 8_000, |i| 0.2 * (i as f64 * 0.047).sin()).unwrap();
    write_wav(&hum, d.join("hum.wav"), WavEncoding::Pcm16).unwrap();
    d
}

/// VCTK-style corpus: `wav48/<spk>/<spk>_NNN.wav` plus `speaker-info.txt`.
/// Speakers alternate F/M and cycle through a few accents.
pub fn vctk_corpus(dir: &Path, speakers: usize, clips_each: usize) -> (PathBuf, PathBuf) {
    let root = dir.join("wav48");
    let accents = ["English", "Indian", "American", "Scottish"];
    let mut info = String::from("ID  AGE  GENDER  ACCENTS  REGION\n");
    for s in 0..speakers {
        let spk = format!("p{}", 225 + s);
        let gender = if s % 2 == 0 { "F" } else { "M" };
        info.push_str(&format!("{}  23  {gender}  {}  Somewhere\n", &spk[1..], accents[s % accents.len()]));
        for c in 0..clips_each {
            let len = 4_000 + 400 * ((s + c) % 5);
            speech_wav(&root.join(&spk).join(format!("{spk}_{:03}.wav", c + 1)), len, 16_000, (s * 100 + c) as u64);
        }
    }
    let info_path = dir.join("speaker-info.txt");
    std::fs::write(&info_path, info).unwrap();
    (root, info_path)
}

pub fn groups_file(dir: &Path) -> PathBuf {
    let p = dir.join("groups.json");
    std::fs::write(&p, r#"{"accents": {"english": "English", "indian": "Indian", "american": "English"}}"#).unwrap();
    p
}

/// Every file under `dir`, keyed by relative path.
pub fn tree(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    walkdir::WalkDir::new(dir)
        .into_iter()
        .map(Result::unwrap)
        .filter(|e| e.file_type().is_file())
        .map(|e| {
            let rel = e.path().strip_prefix(dir).unwrap().to_string_lossy().replace('\\', "/");
            (rel, std::fs::read(e.path()).unwrap())
        })
        .collect()
}

/// Writes one converted-output set per model into `suite/outputs/<model>`
/// and attaches each through the CLI.
pub fn attach_fake_outputs(suite: &Path, models: &[&str]) {
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(suite.join("manifest.json")).unwrap()).unwrap();
    let pairs: Vec<String> = manifest["pairs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| p["pair_id"].as_str().unwrap().to_string())
        .collect();
    for (k, m) in models.iter().enumerate() {
        let out = suite.join("outputs").join(m);
        for (i, p) in pairs.iter().enumerate() {
            speech_wav(&out.join(format!("{p}.wav")), 1_600 + 10 * i, 16_000, 9_000 + (k * 1000 + i) as u64);
        }
        let o = run_bin(&[
            "attach-outputs",
            "--suite",
            suite.to_str().unwrap(),
            "--model",
            m,
            "--outputs",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "attach {m}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

/// A `vcrobust serve` child process on an ephemeral port.
pub struct ServerProc {
    pub child: Child,
    pub base: String,
}

impl ServerProc {
    pub fn spawn(suite: &Path, store: &Path, log: &Path) -> Self {
        Self::spawn_with(suite, store, log, &[])
    }

    pub fn spawn_with(suite: &Path, store: &Path, log: &Path, extra: &[&str]) -> Self {
        let log = std::fs::OpenOptions::new().create(true).append(true).open(log).unwrap();
        let mut child = bin()
            .args([
                "serve",
                "--suite",
                suite.to_str().unwrap(),
                "--store",
                store.to_str().unwrap(),
                "--port",
                "0",
                "--admin-token",
                ADMIN,
            ])
            .args(extra)
            .stdout(Stdio::piped())
            .stderr(Stdio::from(log))
            .spawn()
            .expect("spawn serve");
        let mut line = String::new();
        BufReader::new(child.stdout.take().unwrap()).read_line(&mut line).unwrap();
        let base = line
            .trim()
            .strip_prefix("listening ")
            .unwrap_or_else(|| panic!("unexpected serve output {line:?}"))
            .to_string();
        Self { child, base }
    }

    pub fn url(&self, path: &str) -> String {
        format!("{}{path}", self.base)
    }

    /// SIGKILL: no graceful shutdown, no chance to flush anything.
    pub fn kill(mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

impl Drop for ServerProc {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

pub fn agent() -> ureq::Agent {
    ureq::Agent::config_builder()
        .http_status_as_error(false)
        .timeout_global(Some(std::time::Duration::from_secs(20)))
        .build()
        .into()
}
