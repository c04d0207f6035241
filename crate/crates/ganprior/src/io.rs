//! Weight files, signal files and generator construction.

use std::fs;
use std::path::Path;

use ganprior_core::generator::synthetic_net_with_output;
use ganprior_core::{gpw1, GeneratorNet, RngStream};

use crate::config::{GeneratorSource, SyntheticSpec};
use crate::HarnessError;

fn read(path: &Path) -> Result<Vec<u8>, HarnessError> {
    fs::read(path).map_err(|source| HarnessError::Io { path: path.to_path_buf(), source })
}

pub fn load_generator(path: &Path) -> Result<GeneratorNet, HarnessError> {
    let bytes = read(path)?;
    gpw1::decode(&bytes).map_err(|source| HarnessError::Format { path: path.to_path_buf(), source })
}

pub fn save_generator(path: &Path, net: &GeneratorNet) -> Result<(), HarnessError> {
    fs::write(path, gpw1::encode(net)).map_err(|source| HarnessError::Io { path: path.to_path_buf(), source })
}

pub fn synthetic(spec: &SyntheticSpec) -> Result<GeneratorNet, HarnessError> {
    let mut rng = RngStream::new(spec.seed);
    Ok(synthetic_net_with_output(
        spec.k,
        &spec.hidden_dims,
        spec.n,
        spec.activation,
        spec.output_activation,
        &mut rng,
    )?)
}

pub fn build_generator(source: &GeneratorSource) -> Result<GeneratorNet, HarnessError> {
    match source {
        GeneratorSource::File { path } => load_generator(path),
        GeneratorSource::Synthetic(spec) => synthetic(spec),
    }
}

/// Parses one signal per nonempty line; values separated by whitespace or commas.
/// Lines starting with `#` are skipped.
pub fn parse_signals(text: &str, path: &Path) -> Result<Vec<Vec<f64>>, HarnessError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |msg: String| HarnessError::Signal { path: path.to_path_buf(), line: i + 1, msg };
        let v = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<f64>().map_err(|e| err(format!("{s:?}: {e}"))))
            .collect::<Result<Vec<_>, _>>()?;
        if v.iter().any(|x| !x.is_finite()) {
            return Err(err("non-finite value".into()));
        }
        if let Some(first) = out.first().map(|f: &Vec<f64>| f.len()) {
            if first != v.len() {
                return Err(err(format!("length {} differs from first signal length {first}", v.len())));
            }
        }
        out.push(v);
    }
    if out.is_empty() {
        return Err(HarnessError::Signal { path: path.to_path_buf(), line: 0, msg: "no signals".into() });
    }
    Ok(out)
}

pub fn read_signals(path: &Path) -> Result<Vec<Vec<f64>>, HarnessError> {
    let text = fs::read_to_string(path).map_err(|source| HarnessError::Io { path: path.to_path_buf(), source })?;
    parse_signals(&text, path)
}

pub fn write_signal(path: &Path, v: &[f64]) -> Result<(), HarnessError> {
    let line: Vec<String> = v.iter().map(|x| x.to_string()).collect();
    fs::write(path, line.join(" ") + "\n").map_err(|source| HarnessError::Io { path: path.to_path_buf(), source })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn signals_parse() {
        let p = Path::new("mem");
        let s = parse_signals("# header\n1, 2 3\n\n4 5,6\n", p).unwrap();
        assert_eq!(s, vec![vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]);
        assert!(matches!(parse_signals("1 2\n3\n", p), Err(HarnessError::Signal { line: 2, .. })));
        assert!(parse_signals("1 x\n", p).is_err());
        assert!(parse_signals("\n", p).is_err());
    }
}
