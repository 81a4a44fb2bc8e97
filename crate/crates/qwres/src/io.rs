//! JSON schemas for walks and states, deterministic serialization
//! helpers, and atomic file output.
//!
//! Complex numbers are `[re, im]` pairs everywhere. Walk specs accept
//! either an explicit 2×2 `matrix` or a `rotation` parameter `r` that
//! expands to `[[√(1−r²), r], [−r, √(1−r²)]]`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::Path;

use qwres_core::walk::{Coin, CoinSequence, IntervalZ, WalkState};

/// A failed run, carrying the process exit code.
#[derive(Debug)]
pub enum Failure {
    /// Domain error: bad input, bad parameters, inadmissible walk (exit 1).
    Domain(String),
    /// A verification-style check did not hold (exit 2).
    Verification(String),
}

impl Failure {
    /// The process exit code for this failure.
    pub fn code(&self) -> i32 {
        match self {
            Failure::Domain(_) => 1,
            Failure::Verification(_) => 2,
        }
    }

    /// The message to print on stderr.
    pub fn message(&self) -> &str {
        match self {
            Failure::Domain(m) | Failure::Verification(m) => m,
        }
    }
}

impl From<qwres_core::Error> for Failure {
    fn from(e: qwres_core::Error) -> Self {
        Failure::Domain(e.to_string())
    }
}

/// Shorthand for fallible CLI operations.
pub type CliResult<T> = Result<T, Failure>;

/// One complex number as `[re, im]`.
pub type CJson = [f64; 2];

/// Converts to the JSON `[re, im]` form.
pub fn c_json(z: Complex64) -> CJson {
    [z.re, z.im]
}

/// Reads the JSON `[re, im]` form.
pub fn c_from(a: CJson) -> Complex64 {
    Complex64::new(a[0], a[1])
}

/// One coin of a walk spec: site plus exactly one of `matrix`/`rotation`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoinSpec {
    /// Site the coin sits on.
    pub x: i64,
    /// Explicit unitary as rows of `[re, im]` entries.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matrix: Option<[[CJson; 2]; 2]>,
    /// Rotation parameter `r`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rotation: Option<f64>,
}

/// A finitely perturbed walk: its non-identity coins.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WalkSpec {
    /// The coins, one site each.
    pub coins: Vec<CoinSpec>,
}

/// One site amplitude of a state spec.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AmpSpec {
    /// Site.
    pub x: i64,
    /// Left-mover amplitude `[re, im]`.
    #[serde(rename = "L")]
    pub l: CJson,
    /// Right-mover amplitude `[re, im]`.
    #[serde(rename = "R")]
    pub r: CJson,
}

/// A finitely supported state.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateSpec {
    /// Site amplitudes; sites must be distinct.
    pub amplitudes: Vec<AmpSpec>,
}

fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path)
        .map_err(|e| Failure::Domain(format!("cannot read {}: {e}", path.display())))
}

fn parse_json<T: for<'de> Deserialize<'de>>(path: &Path, text: &str) -> CliResult<T> {
    // serde_json errors carry "at line L column C"; keep that location.
    serde_json::from_str(text)
        .map_err(|e| Failure::Domain(format!("malformed JSON in {}: {e}", path.display())))
}

/// Builds a library coin from a spec entry, citing the admissibility
/// assumption on failure.
fn coin_of_spec(s: &CoinSpec) -> CliResult<Coin> {
    let coin = match (&s.matrix, s.rotation) {
        (Some(m), None) => Coin::new([
            [c_from(m[0][0]), c_from(m[0][1])],
            [c_from(m[1][0]), c_from(m[1][1])],
        ]),
        (None, Some(r)) => Coin::rotation(r),
        _ => {
            return Err(Failure::Domain(format!(
                "coin at x = {}: exactly one of \"matrix\" or \"rotation\" must be given",
                s.x
            )))
        }
    };
    coin.map_err(|e| {
        Failure::Domain(format!(
            "coin at x = {}: violates the admissibility assumption \
             (every coin unitary with nonvanishing diagonal entries): {e}",
            s.x
        ))
    })
}

/// Reads and validates a walk spec file.
pub fn read_walk(path: &Path) -> CliResult<CoinSequence> {
    let spec: WalkSpec = parse_json(path, &read_text(path)?)?;
    let mut pairs = Vec::with_capacity(spec.coins.len());
    let mut seen = std::collections::BTreeSet::new();
    for c in &spec.coins {
        if !seen.insert(c.x) {
            return Err(Failure::Domain(format!(
                "duplicate coin at x = {} in {}",
                c.x,
                path.display()
            )));
        }
        pairs.push((c.x, coin_of_spec(c)?));
    }
    Ok(CoinSequence::new(pairs))
}

/// Reads and validates a state spec file.
pub fn read_state(path: &Path) -> CliResult<WalkState> {
    let spec: StateSpec = parse_json(path, &read_text(path)?)?;
    if spec.amplitudes.is_empty() {
        return Err(Failure::Domain(format!(
            "state in {} has no amplitudes",
            path.display()
        )));
    }
    let mut seen = std::collections::BTreeSet::new();
    let mut pairs = Vec::with_capacity(spec.amplitudes.len());
    for a in &spec.amplitudes {
        if !seen.insert(a.x) {
            return Err(Failure::Domain(format!(
                "duplicate amplitude at x = {} in {}",
                a.x,
                path.display()
            )));
        }
        pairs.push((a.x, [c_from(a.l), c_from(a.r)]));
    }
    WalkState::from_amplitudes(&pairs).map_err(Failure::from)
}

/// The canonical spec of a coin sequence (explicit matrices, sites
/// ascending).
pub fn walk_spec(coins: &CoinSequence) -> WalkSpec {
    let coins_out = coins
        .support()
        .into_iter()
        .map(|x| {
            let m = coins.coin(x).matrix();
            CoinSpec {
                x,
                matrix: Some([
                    [c_json(m[0][0]), c_json(m[0][1])],
                    [c_json(m[1][0]), c_json(m[1][1])],
                ]),
                rotation: None,
            }
        })
        .collect();
    WalkSpec { coins: coins_out }
}

/// The canonical spec of a state: every site of its window, ascending.
pub fn state_spec(state: &WalkState) -> StateSpec {
    let amplitudes = state
        .window()
        .sites()
        .map(|x| {
            let a = state.amp(x);
            AmpSpec {
                x,
                l: c_json(a[0]),
                r: c_json(a[1]),
            }
        })
        .collect();
    StateSpec { amplitudes }
}

/// Serializes a JSON value the way every output path does: pretty,
/// trailing newline.
pub fn to_json_text<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("JSON serialization cannot fail");
    s.push('\n');
    s
}

/// Writes a file atomically: temp file in the same directory, then rename.
pub fn write_atomic(path: &Path, contents: &str) -> CliResult<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty());
    let file_name = path
        .file_name()
        .ok_or_else(|| Failure::Domain(format!("not a file path: {}", path.display())))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(file_name);
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp = match dir {
        Some(d) => d.join(&tmp_name),
        None => std::path::PathBuf::from(&tmp_name),
    };
    fs::write(&tmp, contents)
        .map_err(|e| Failure::Domain(format!("cannot write {}: {e}", tmp.display())))?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        Failure::Domain(format!("cannot move output into {}: {e}", path.display()))
    })
}

/// Prints to stdout, or writes atomically to `out` when given.
pub fn emit(out: Option<&Path>, contents: &str) -> CliResult<()> {
    match out {
        Some(path) => write_atomic(path, contents),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

/// Parses `"re,im"` into a complex number.
pub fn parse_complex(s: &str) -> Result<Complex64, String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(format!("expected RE,IM, got {s:?}"));
    }
    let re: f64 = parts[0]
        .trim()
        .parse()
        .map_err(|e| format!("bad real part {:?}: {e}", parts[0]))?;
    let im: f64 = parts[1]
        .trim()
        .parse()
        .map_err(|e| format!("bad imaginary part {:?}: {e}", parts[1]))?;
    Ok(Complex64::new(re, im))
}

/// Parses `"a,b"` into an integer interval.
pub fn parse_interval(s: &str) -> Result<IntervalZ, String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(format!("expected A,B, got {s:?}"));
    }
    let lo: i64 = parts[0]
        .trim()
        .parse()
        .map_err(|e| format!("bad lower end {:?}: {e}", parts[0]))?;
    let hi: i64 = parts[1]
        .trim()
        .parse()
        .map_err(|e| format!("bad upper end {:?}: {e}", parts[1]))?;
    IntervalZ::new(lo, hi).map_err(|e| e.to_string())
}

/// Parses a comma-separated list of positive floats.
pub fn parse_float_list(s: &str) -> Result<Vec<f64>, String> {
    let mut out = Vec::new();
    for part in s.split(',') {
        let v: f64 = part
            .trim()
            .parse()
            .map_err(|e| format!("bad number {part:?}: {e}"))?;
        out.push(v);
    }
    if out.is_empty() {
        return Err("empty list".into());
    }
    Ok(out)
}
